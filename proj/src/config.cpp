#include "alm/config.hpp"

#include <fstream>
#include <sstream>

#include "alm/errors.hpp"
#include "alm/io.hpp"
#include "json.hpp"

namespace alm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Every accepted key appears here; null marks "no default".
const char* const kDefaults = R"({
  "schema_version": 1,
  "seed": 1,
  "output": "out",
  "economics": {"r": 0.02, "gamma": 0.02, "a_l": 0.026, "horizon": 20},
  "schedule": {
    "source": "builtin",
    "buckets": null,
    "spreading": "uniform-monthly",
    "payments_csv": null,
    "constraints_csv": null
  },
  "model": {
    "kind": "bs",
    "bs": {"mu": 0.07, "sigma": 0.18, "s0": 1},
    "mmm": {"alpha0": 2.317, "eta": 0.0542, "s0": null}
  },
  "objective": {"preset": "g3", "c2": null, "c3": null, "scale": 1000},
  "grid": {
    "a_min": 0, "a_max": null, "a_step": 200,
    "d_max": null, "d_step": 500,
    "s_meshes": 100, "s_samples": 600000
  },
  "solver": {"controls": 21, "n_inner": 4000, "steps_per_year": 2},
  "simulation": {"n_paths": 50000, "steps_per_year": 2, "snapshot_cap": 1000000},
  "report": {
    "levels": [0.01, 0.02, 0.03, 0.05, 0.1, 0.2, 0.3],
    "bins": 80,
    "normalization": "reference"
  },
  "sweep": {"a_l": [0.022, 0.026, 0.03], "evaluate": 0.026}
})";

void check_keys(const json& defaults, const json& user, const std::string& prefix) {
  if (!user.is_object()) throw ConfigError("config key '" + prefix + "' must be an object");
  for (const auto& [key, value] : user.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!defaults.contains(key)) throw ConfigError("unknown config key '" + path + "'");
    if (defaults[key].is_object()) check_keys(defaults[key], value, path);
  }
}

const json& at(const json& doc, const std::string& dotted) {
  const json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = dotted.find('.', start);
    node = &node->at(dotted.substr(start, dot - start));
    if (dot == std::string::npos) return *node;
    start = dot + 1;
  }
}

double number(const json& doc, const std::string& key) {
  const json& v = at(doc, key);
  if (!v.is_number()) throw ConfigError("config key '" + key + "' must be a number");
  return v.get<double>();
}

std::optional<double> optional_number(const json& doc, const std::string& key) {
  if (at(doc, key).is_null()) return std::nullopt;
  return number(doc, key);
}

std::uint64_t count(const json& doc, const std::string& key) {
  const json& v = at(doc, key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw ConfigError("config key '" + key + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::string text(const json& doc, const std::string& key) {
  const json& v = at(doc, key);
  if (!v.is_string()) throw ConfigError("config key '" + key + "' must be a string");
  return v.get<std::string>();
}

std::vector<double> number_list(const json& doc, const std::string& key) {
  const json& v = at(doc, key);
  if (!v.is_array()) throw ConfigError("config key '" + key + "' must be a list of numbers");
  std::vector<double> out;
  for (const json& x : v) {
    if (!x.is_number()) throw ConfigError("config key '" + key + "' must be a list of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

int steps_per_year(const json& doc, const std::string& key) {
  const std::uint64_t n = count(doc, key);
  if (n < 1 || n > 1000) throw ConfigError("config key '" + key + "' must lie in [1, 1000]");
  return static_cast<int>(n);
}

fs::path resolve_path(const std::string& p, const fs::path& base_dir) {
  fs::path path(p);
  if (path.is_relative()) path = base_dir / path;
  return path.lexically_normal();
}

CashflowSchedule read_schedule(json& doc, const fs::path& base_dir, const EconomicParams& econ) {
  const std::string source = text(doc, "schedule.source");
  if (source == "builtin") {
    if (text(doc, "schedule.spreading") != "uniform-monthly") {
      throw ConfigError("config key 'schedule.spreading' must be 'uniform-monthly'");
    }
    std::vector<Bucket> buckets = default_buckets();
    const json& custom = at(doc, "schedule.buckets");
    if (!custom.is_null()) {
      if (!custom.is_array()) throw ConfigError("config key 'schedule.buckets' must be a list");
      buckets.clear();
      for (const json& b : custom) {
        if (!b.is_object() || !b.contains("year") || !b.contains("total") ||
            !b["year"].is_number_integer() || !b["total"].is_number()) {
          throw ConfigError("config key 'schedule.buckets' entries need integer 'year' and 'total'");
        }
        buckets.push_back({b["year"].get<double>(), b["total"].get<double>()});
      }
    }
    return build_schedule(buckets, Spreading::kUniformMonthly, econ);
  }
  if (source != "csv") throw ConfigError("config key 'schedule.source' must be 'builtin' or 'csv'");

  json& payments_key = doc["schedule"]["payments_csv"];
  if (!payments_key.is_string()) {
    throw ConfigError("config key 'schedule.payments_csv' is required when schedule.source is csv");
  }
  const fs::path payments = resolve_path(payments_key.get<std::string>(), base_dir);
  payments_key = payments.string();
  CashflowSchedule schedule;
  schedule.payments = io::read_payments_csv(payments);

  json& constraints_key = doc["schedule"]["constraints_csv"];
  if (constraints_key.is_null()) {
    schedule.constraint_dates = semiannual_dates(econ.horizon);
  } else {
    if (!constraints_key.is_string()) {
      throw ConfigError("config key 'schedule.constraints_csv' must be a path");
    }
    const fs::path constraints = resolve_path(constraints_key.get<std::string>(), base_dir);
    constraints_key = constraints.string();
    schedule.constraint_dates = io::read_constraint_dates_csv(constraints);
  }
  schedule.validate();
  return schedule;
}

ObjectiveG read_objective(const json& doc) {
  const std::string preset = text(doc, "objective.preset");
  ObjectiveG g;
  if (preset == "g1") {
    g = ObjectiveG::g1();
  } else if (preset == "g2") {
    g = ObjectiveG::g2();
  } else if (preset == "g3") {
    g = ObjectiveG::g3();
  } else if (preset != "custom") {
    throw ConfigError("config key 'objective.preset' must be g1, g2, g3 or custom");
  }
  const auto c2 = optional_number(doc, "objective.c2");
  const auto c3 = optional_number(doc, "objective.c3");
  if (preset == "custom" && (!c2 || !c3)) {
    throw ConfigError("objective.preset custom needs objective.c2 and objective.c3");
  }
  if (c2) g.c2 = *c2;
  if (c3) g.c3 = *c3;
  g.scale = number(doc, "objective.scale");
  if (!(g.scale > 0.0)) throw ConfigError("config key 'objective.scale' must be > 0");
  return g;
}

json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": invalid JSON: " + e.what());
  }
}

void apply_override(json& doc, const json& defaults, const Override& o) {
  json* node = &doc;
  const json* shape = &defaults;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = o.key.find('.', start);
    const std::string part = o.key.substr(start, dot - start);
    if (!shape->is_object() || !shape->contains(part)) {
      throw ConfigError("unknown config key '" + o.key + "'");
    }
    shape = &(*shape)[part];
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (shape->is_object()) throw ConfigError("config key '" + o.key + "' is a section");
  json value = json::parse(o.value, nullptr, false);
  if (value.is_discarded()) value = o.value;
  *node = std::move(value);
}

}  // namespace

void RunConfig::set_workers(int workers) {
  if (workers < 0) throw ConfigError("--workers must be >= 0");
  solver.workers = workers;
  simulation.workers = workers;
}

PipelineConfig RunConfig::pipeline() const {
  PipelineConfig p;
  p.model = model;
  p.reference_model = reference_model;
  p.schedule = schedule;
  p.econ = econ;
  p.grid = grid;
  p.objective = objective;
  p.solver = solver;
  p.simulation = simulation;
  p.levels = levels;
  return p;
}

Override parse_override(const std::string& text) {
  const std::size_t eq = text.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + text + "' must look like key=value");
  }
  return {text.substr(0, eq), text.substr(eq + 1)};
}

std::string default_config_text() { return json::parse(kDefaults).dump(2) + "\n"; }

RunConfig config_from_text(const std::string& json_text, const fs::path& base_dir,
                           const std::vector<Override>& overrides) {
  const json defaults = json::parse(kDefaults);
  json doc = defaults;
  if (!json_text.empty()) {
    const json user = parse_json(json_text, "config");
    check_keys(defaults, user, "");
    if (user.contains("schema_version") &&
        user["schema_version"] != json(kConfigSchemaVersion)) {
      throw ConfigError("config schema_version " + user["schema_version"].dump() +
                        " is not supported (expected " +
                        std::to_string(kConfigSchemaVersion) + ")");
    }
    doc.merge_patch(user);
    // merge_patch deletes keys set to null; restore them from the defaults.
    for (const auto& [section, value] : defaults.items()) {
      if (!doc.contains(section)) doc[section] = value;
      if (!value.is_object()) continue;
      for (const auto& [key, inner] : value.items()) {
        if (!doc[section].contains(key)) doc[section][key] = inner.is_object() ? inner : json();
      }
    }
    for (const char* sub : {"bs", "mmm"}) {
      for (const auto& [key, inner] : defaults["model"][sub].items()) {
        if (!doc["model"][sub].contains(key)) doc["model"][sub][key] = json();
      }
    }
  }
  for (const Override& o : overrides) apply_override(doc, defaults, o);

  RunConfig c;
  if (count(doc, "schema_version") != static_cast<std::uint64_t>(kConfigSchemaVersion)) {
    throw ConfigError("config schema_version must be " + std::to_string(kConfigSchemaVersion));
  }
  c.seed = count(doc, "seed");
  c.output = text(doc, "output");

  c.econ.r = number(doc, "economics.r");
  c.econ.gamma = number(doc, "economics.gamma");
  c.econ.a_l = number(doc, "economics.a_l");
  c.econ.horizon = number(doc, "economics.horizon");
  c.econ.validate();
  c.schedule = read_schedule(doc, base_dir, c.econ);

  c.reference_model = {number(doc, "model.bs.mu"), number(doc, "model.bs.sigma"),
                       number(doc, "model.bs.s0")};
  const std::string kind = text(doc, "model.kind");
  if (kind == "bs") {
    c.model = c.reference_model;
  } else if (kind == "mmm") {
    if (at(doc, "model.mmm.s0").is_null()) throw ConfigError("model.mmm.s0 is required");
    c.model = MmmParams{number(doc, "model.mmm.alpha0"), number(doc, "model.mmm.eta"),
                        number(doc, "model.mmm.s0")};
  } else {
    throw ConfigError("config key 'model.kind' must be 'bs' or 'mmm'");
  }
  if (!(c.reference_model.sigma >= 0.0) || !(c.reference_model.s0 > 0.0)) {
    throw ConfigError("model.bs needs sigma >= 0 and s0 > 0");
  }
  if (const auto* m = std::get_if<MmmParams>(&c.model)) m->validate();

  c.objective = read_objective(doc);

  c.grid.a_min = number(doc, "grid.a_min");
  c.grid.a_max = optional_number(doc, "grid.a_max");
  c.grid.a_step = number(doc, "grid.a_step");
  c.grid.d_max = optional_number(doc, "grid.d_max");
  c.grid.d_step = number(doc, "grid.d_step");
  c.grid.s_meshes = count(doc, "grid.s_meshes");
  c.grid.s_samples = count(doc, "grid.s_samples");

  const json& controls = at(doc, "solver.controls");
  if (controls.is_array()) {
    c.solver.controls = number_list(doc, "solver.controls");
  } else {
    const std::uint64_t n = count(doc, "solver.controls");
    if (n < 2) throw ConfigError("config key 'solver.controls' needs at least 2 controls");
    c.solver.controls = uniform_controls(n);
  }
  c.solver.n_inner = count(doc, "solver.n_inner");
  c.solver.steps_per_year = steps_per_year(doc, "solver.steps_per_year");
  c.solver.seed = c.seed;

  c.simulation.n_paths = count(doc, "simulation.n_paths");
  c.simulation.steps_per_year = steps_per_year(doc, "simulation.steps_per_year");
  c.simulation.snapshot_cap = count(doc, "simulation.snapshot_cap");
  c.simulation.seed = c.seed;
  if (c.simulation.n_paths < 1) throw ConfigError("config key 'simulation.n_paths' must be >= 1");

  c.levels = number_list(doc, "report.levels");
  for (double p : c.levels) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("config key 'report.levels' must lie in (0, 1)");
  }
  c.bins = count(doc, "report.bins");
  if (c.bins < 1) throw ConfigError("config key 'report.bins' must be >= 1");
  const json& norm = at(doc, "report.normalization");
  if (norm.is_null() || norm == "none") {
    c.normalization.mode = NormalizationSetting::Mode::kNone;
  } else if (norm == "reference") {
    c.normalization.mode = NormalizationSetting::Mode::kReference;
  } else if (norm.is_number() && norm.get<double>() > 0.0) {
    c.normalization = {NormalizationSetting::Mode::kValue, norm.get<double>()};
  } else {
    throw ConfigError("config key 'report.normalization' must be \"reference\", \"none\" or > 0");
  }

  c.sweep_a_l = number_list(doc, "sweep.a_l");
  c.sweep_evaluate = number(doc, "sweep.evaluate");

  json resolved = doc;
  resolved.erase("output");
  c.resolved = resolved.dump(2) + "\n";
  return c;
}

RunConfig load_config(const std::optional<fs::path>& file, const std::vector<Override>& overrides) {
  if (!file) return config_from_text("", fs::current_path(), overrides);
  const std::string body = io::read_text(*file);
  fs::path base = file->parent_path();
  if (base.empty()) base = fs::current_path();
  return config_from_text(body, fs::absolute(base), overrides);
}

}  // namespace alm
