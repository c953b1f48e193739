#include "alm/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "alm/errors.hpp"

namespace alm::io {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(trim(cell));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ',';
    out += format_double(values[i]);
  }
  return out;
}

std::vector<double> parse_list(const std::string& text, const std::string& context) {
  std::vector<double> out;
  if (trim(text).empty()) return out;
  for (const std::string& cell : split(text, ',')) out.push_back(parse_double(cell, context));
  return out;
}

std::string layer_file(std::size_t k) {
  char name[32];
  std::snprintf(name, sizeof name, "layer_%03zu.csv", k);
  return name;
}

}  // namespace

std::string format_double(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, result.ptr);
}

double parse_double(const std::string& text, const std::string& context) {
  const std::string t = trim(text);
  double value = 0.0;
  const auto result = std::from_chars(t.data(), t.data() + t.size(), value);
  if (result.ec != std::errc() || result.ptr != t.data() + t.size()) {
    if (t == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw IoError("malformed number '" + t + "' in " + context);
  }
  return value;
}

void KeyValue::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

bool KeyValue::has(const std::string& key) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == key; });
}

const std::string& KeyValue::get(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  throw IoError("missing key '" + key + "'");
}

double KeyValue::number(const std::string& key) const { return parse_double(get(key), key); }

std::string KeyValue::str() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

KeyValue KeyValue::parse(const std::string& text, const std::string& source) {
  KeyValue kv;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw IoError(source + ":" + std::to_string(number) + ": expected 'key = value'");
    }
    kv.entries_.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return kv;
}

KeyValue KeyValue::read(const fs::path& path) { return parse(read_text(path), path.string()); }

void KeyValue::write(const fs::path& path) const { write_text(path, str()); }

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw IoError("CSV column '" + name + "' not found");
  return static_cast<std::size_t>(it - header.begin());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

CsvTable read_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty CSV file");
  table.header = split(trim(line), ',');
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto cells = split(trim(line), ',');
    if (cells.size() != table.header.size()) {
      throw IoError(path.string() + ": row with " + std::to_string(cells.size()) +
                    " cells, expected " + std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(cells));
  }
  return table;
}

std::vector<Payment> read_payments_csv(const fs::path& path) {
  const CsvTable table = read_csv(path);
  const std::size_t t = table.column("date_years");
  const std::size_t a = table.column("amount_meur");
  std::vector<Payment> out;
  for (const auto& row : table.rows) {
    out.push_back({parse_double(row[t], path.string()), parse_double(row[a], path.string())});
  }
  return out;
}

std::vector<double> read_constraint_dates_csv(const fs::path& path) {
  const CsvTable table = read_csv(path);
  const std::size_t t = table.column("date_years");
  std::vector<double> out;
  for (const auto& row : table.rows) out.push_back(parse_double(row[t], path.string()));
  return out;
}

std::vector<PricePoint> read_prices_csv(const fs::path& path) {
  const CsvTable table = read_csv(path);
  const std::size_t t = table.column("date_years");
  const std::size_t s = table.column("index_level");
  std::vector<PricePoint> out;
  for (const auto& row : table.rows) {
    out.push_back({parse_double(row[t], path.string()), parse_double(row[s], path.string())});
  }
  return out;
}

std::string strategy_text(const Strategy& strategy, const std::string& solve_dir) {
  KeyValue kv;
  kv.set("kind", strategy_kind(strategy));
  if (const auto* s = std::get_if<ConstantMix>(&strategy)) {
    kv.set("weight", s->weight);
  } else if (const auto* q = std::get_if<Quadratic>(&strategy)) {
    kv.set("a", q->a);
    kv.set("b", q->b);
    kv.set("c", q->c);
  } else if (const auto* lq = std::get_if<LinearQuadratic>(&strategy)) {
    kv.set("a0", lq->a0);
    kv.set("a1", lq->a1);
    kv.set("b0", lq->b0);
    kv.set("b1", lq->b1);
    kv.set("c0", lq->c0);
    kv.set("c1", lq->c1);
  } else {
    if (solve_dir.empty()) throw ConfigError("tabulated strategy files need the solve directory");
    kv.set("solve_dir", solve_dir);
  }
  return kv.str();
}

void write_strategy(const fs::path& path, const Strategy& strategy, const std::string& solve_dir) {
  write_text(path, strategy_text(strategy, solve_dir));
}

Strategy read_strategy(const fs::path& path) {
  const KeyValue kv = KeyValue::read(path);
  const std::string& kind = kv.get("kind");
  if (kind == "constant-mix") return ConstantMix{kv.number("weight")};
  if (kind == "quadratic") return Quadratic{kv.number("a"), kv.number("b"), kv.number("c")};
  if (kind == "linear-quadratic") {
    return LinearQuadratic{kv.number("a0"), kv.number("a1"), kv.number("b0"),
                           kv.number("b1"), kv.number("c0"), kv.number("c1")};
  }
  if (kind == "tabulated") {
    fs::path dir = kv.get("solve_dir");
    if (dir.is_relative()) dir = path.parent_path() / dir;
    return Tabulated{read_solve_result(dir).policy};
  }
  throw IoError(path.string() + ": unknown strategy kind '" + kind + "'");
}

void write_solve_result(const fs::path& dir, const SolveResult& result) {
  KeyValue meta;
  meta.set("format", "alm-solve");
  meta.set("version", std::to_string(kSolveFormatVersion));
  meta.set("model", std::string(model_name(result.kind())));
  if (const auto* gbm = std::get_if<GbmParams>(&result.model)) {
    meta.set("model.mu", gbm->mu);
    meta.set("model.sigma", gbm->sigma);
    meta.set("model.s0", gbm->s0);
  } else {
    const auto& mmm = std::get<MmmParams>(result.model);
    meta.set("model.alpha0", mmm.alpha0);
    meta.set("model.eta", mmm.eta);
    meta.set("model.s0", mmm.s0);
  }
  meta.set("economics.r", result.econ.r);
  meta.set("economics.gamma", result.econ.gamma);
  meta.set("economics.a_l", result.econ.a_l);
  meta.set("economics.horizon", result.econ.horizon);
  meta.set("objective.c2", result.objective.c2);
  meta.set("objective.c3", result.objective.c3);
  meta.set("objective.scale", result.objective.scale);
  const StateGrid& g = result.grids.front();
  meta.set("grid.a_min", g.assets.front());
  meta.set("grid.a_max", g.assets.back());
  meta.set("grid.a_step", g.assets.step());
  meta.set("grid.d_max", g.endowment.back());
  meta.set("grid.d_step", g.endowment.step());
  meta.set("grid.s_meshes", std::to_string(result.grid_spec.s_meshes));
  meta.set("grid.s_samples", std::to_string(result.grid_spec.s_samples));
  meta.set("solver.controls", join(result.options.controls));
  meta.set("solver.n_inner", std::to_string(result.options.n_inner));
  meta.set("solver.steps_per_year", std::to_string(result.options.steps_per_year));
  meta.set("seed", std::to_string(result.options.seed));
  meta.set("initial_assets", result.initial_assets);
  meta.set("initial_value", result.initial_value());
  meta.set("layers", std::to_string(result.times.size()));
  meta.set("times", join(result.times));
  meta.set("clamp_rate", join(result.clamp_rate));
  for (std::size_t i = 0; i < result.warnings.size(); ++i) {
    meta.set("warning." + std::to_string(i), result.warnings[i]);
  }
  meta.write(dir / "meta.txt");

  const bool with_index = result.kind() == ModelKind::kMmm;
  for (std::size_t k = 0; k < result.times.size(); ++k) {
    const StateGrid& grid = result.grids[k];
    const bool has_policy = k < result.policy->phi.size();
    std::string text = with_index ? "A,D,S,value,phi\n" : "A,D,value,phi\n";
    for (std::size_t ia = 0; ia < grid.assets.size(); ++ia) {
      for (std::size_t id = 0; id < grid.endowment.size(); ++id) {
        for (std::size_t is = 0; is < grid.index.size(); ++is) {
          const std::size_t node = grid.flat(ia, id, is);
          text += format_double(grid.assets[ia]) + ',' + format_double(grid.endowment[id]) + ',';
          if (with_index) text += format_double(grid.index[is]) + ',';
          text += format_double(result.values[k][node]) + ',';
          if (has_policy) text += format_double(result.policy->phi[k][node]);
          text += '\n';
        }
      }
    }
    write_text(dir / layer_file(k), text);
  }
}

SolveResult read_solve_result(const fs::path& dir) {
  const KeyValue meta = KeyValue::read(dir / "meta.txt");
  if (meta.get("format") != "alm-solve") throw IoError(dir.string() + ": not a solve result");
  if (meta.get("version") != std::to_string(kSolveFormatVersion)) {
    throw IoError(dir.string() + ": unsupported solve format version " + meta.get("version"));
  }

  SolveResult result;
  const bool with_index = meta.get("model") == "mmm";
  if (with_index) {
    result.model = MmmParams{meta.number("model.alpha0"), meta.number("model.eta"),
                             meta.number("model.s0")};
  } else {
    result.model =
        GbmParams{meta.number("model.mu"), meta.number("model.sigma"), meta.number("model.s0")};
  }
  result.econ = {meta.number("economics.r"), meta.number("economics.gamma"),
                 meta.number("economics.a_l"), meta.number("economics.horizon")};
  result.objective = {meta.number("objective.c2"), meta.number("objective.c3"),
                      meta.number("objective.scale")};
  result.grid_spec.a_min = meta.number("grid.a_min");
  result.grid_spec.a_max = meta.number("grid.a_max");
  result.grid_spec.a_step = meta.number("grid.a_step");
  result.grid_spec.d_max = meta.number("grid.d_max");
  result.grid_spec.d_step = meta.number("grid.d_step");
  result.grid_spec.s_meshes = static_cast<std::size_t>(meta.number("grid.s_meshes"));
  result.grid_spec.s_samples = static_cast<std::size_t>(meta.number("grid.s_samples"));
  result.options.controls = parse_list(meta.get("solver.controls"), "solver.controls");
  result.options.n_inner = static_cast<std::size_t>(meta.number("solver.n_inner"));
  result.options.steps_per_year = static_cast<int>(meta.number("solver.steps_per_year"));
  result.options.seed = std::stoull(meta.get("seed"));
  result.initial_assets = meta.number("initial_assets");
  result.times = parse_list(meta.get("times"), "times");
  result.clamp_rate = parse_list(meta.get("clamp_rate"), "clamp_rate");
  for (std::size_t i = 0; meta.has("warning." + std::to_string(i)); ++i) {
    result.warnings.push_back(meta.get("warning." + std::to_string(i)));
  }

  const Axis assets = Axis::uniform(result.grid_spec.a_min, *result.grid_spec.a_max,
                                    result.grid_spec.a_step);
  const Axis endowment = Axis::uniform(0.0, *result.grid_spec.d_max, result.grid_spec.d_step);
  auto policy = std::make_shared<PolicyGrid>();
  policy->model = with_index ? ModelKind::kMmm : ModelKind::kBlackScholes;
  const std::size_t n_layers = result.times.size();
  if (n_layers < 2) throw IoError(dir.string() + ": solve result needs at least two layers");

  for (std::size_t k = 0; k < n_layers; ++k) {
    const fs::path file = dir / layer_file(k);
    const CsvTable table = read_csv(file);
    const std::size_t col_value = table.column("value");
    const std::size_t col_phi = table.column("phi");
    const std::size_t per_index = assets.size() * endowment.size();
    if (per_index == 0 || table.rows.size() % per_index != 0) {
      throw IoError(file.string() + ": row count does not match the grid");
    }
    const std::size_t ns = table.rows.size() / per_index;
    std::vector<double> levels(ns, initial_level(result.model));
    if (with_index) {
      const std::size_t col_s = table.column("S");
      for (std::size_t is = 0; is < ns; ++is) levels[is] = parse_double(table.rows[is][col_s], file.string());
    }
    StateGrid grid{assets, endowment, Axis(levels)};
    std::vector<double> values(table.rows.size());
    std::vector<double> phi(table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
      values[i] = parse_double(table.rows[i][col_value], file.string());
      if (k + 1 < n_layers) phi[i] = parse_double(table.rows[i][col_phi], file.string());
    }
    result.grids.push_back(grid);
    result.values.push_back(std::move(values));
    if (k + 1 < n_layers) {
      policy->times.push_back(result.times[k]);
      policy->grids.push_back(grid);
      policy->phi.push_back(std::move(phi));
    }
  }
  result.policy = std::move(policy);
  return result;
}

std::string samples_csv(const PTSampleSet& set) {
  std::string out = "path,p_t,d_t,n_injections\n";
  for (std::size_t i = 0; i < set.size(); ++i) {
    out += std::to_string(i) + ',' + format_double(set.samples[i]) + ',' +
           format_double(set.endowments[i]) + ',' + std::to_string(set.injections[i]) + '\n';
  }
  return out;
}

std::string snapshots_csv(const PTSampleSet& set) {
  std::string out = "path,t,funding_ratio,phi\n";
  for (const Snapshot& s : set.snapshots) {
    out += std::to_string(s.path) + ',' + format_double(s.t) + ',' +
           format_double(s.funding_ratio) + ',' + format_double(s.phi) + '\n';
  }
  return out;
}

std::string quantiles_csv(const QuantileReport& report) {
  std::string out = "level,raw,normalized\n";
  for (std::size_t i = 0; i < report.levels.size(); ++i) {
    out += format_double(report.levels[i]) + ',' + format_double(report.raw[i]) + ',';
    if (!report.normalized.empty()) out += format_double(report.normalized[i]);
    out += '\n';
  }
  return out;
}

std::string histogram_csv(const std::vector<HistogramBin>& bins) {
  std::string out = "bin_left,bin_right,count\n";
  for (const HistogramBin& b : bins) {
    out += format_double(b.left) + ',' + format_double(b.right) + ',' + std::to_string(b.count) + '\n';
  }
  return out;
}

std::vector<double> read_samples_csv(const fs::path& path) {
  const CsvTable table = read_csv(path);
  const std::size_t col = table.column("p_t");
  std::vector<double> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) out.push_back(parse_double(row[col], path.string()));
  return out;
}

std::vector<Snapshot> read_snapshots_csv(const fs::path& path) {
  const CsvTable table = read_csv(path);
  const std::size_t p = table.column("path");
  const std::size_t t = table.column("t");
  const std::size_t x = table.column("funding_ratio");
  const std::size_t phi = table.column("phi");
  std::vector<Snapshot> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    out.push_back({static_cast<std::uint32_t>(std::stoul(row[p])),
                   parse_double(row[t], path.string()), parse_double(row[x], path.string()),
                   parse_double(row[phi], path.string())});
  }
  return out;
}

}  // namespace alm::io
