#include "alm/market_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "alm/errors.hpp"

namespace alm {

void GbmParams::validate() const {
  if (!(sigma >= 0.0)) throw ConfigError("model.bs.sigma must be >= 0");
  if (!(s0 > 0.0)) throw ConfigError("model.bs.s0 must be > 0");
  if (!std::isfinite(mu)) throw ConfigError("model.bs.mu must be finite");
}

double MmmParams::alpha(double t) const { return alpha0 * std::exp(eta * t); }

void MmmParams::validate() const {
  if (!(alpha0 > 0.0)) throw ConfigError("model.mmm.alpha0 must be > 0");
  if (!(eta > 0.0)) throw ConfigError("model.mmm.eta must be > 0");
  if (std::isnan(s0)) throw ConfigError("model.mmm.s0 is required (no default)");
  if (!(s0 > 0.0)) throw ConfigError("model.mmm.s0 must be > 0");
}

ModelKind kind_of(const MarketModel& model) {
  return std::holds_alternative<GbmParams>(model) ? ModelKind::kBlackScholes : ModelKind::kMmm;
}

double initial_level(const MarketModel& model) {
  return std::visit([](const auto& p) { return p.s0; }, model);
}

std::string_view model_name(ModelKind kind) {
  return kind == ModelKind::kBlackScholes ? "bs" : "mmm";
}

double gbm_step(double s, double dt, const GbmParams& p, double r, double z) {
  if (!(s > 0.0)) throw std::domain_error("gbm_step: index level must be > 0");
  if (!(dt >= 0.0)) throw std::domain_error("gbm_step: dt must be >= 0");
  const double drift = (p.mu - r - 0.5 * p.sigma * p.sigma) * dt;
  return s * std::exp(drift + p.sigma * std::sqrt(dt) * z);
}

double mmm_time_change(double t, const MmmParams& p) {
  const double x = p.eta * t;
  if (std::abs(x) < 1e-8) return 0.25 * p.alpha0 * t * (1.0 + 0.5 * x);
  return p.alpha0 * std::expm1(x) / (4.0 * p.eta);
}

namespace {

// φ(t + dt) − φ(t) without cancellation.
double time_change_increment(double t, double dt, const MmmParams& p) {
  const double x = p.eta * dt;
  const double growth = std::exp(p.eta * t);
  if (std::abs(x) < 1e-8) return 0.25 * p.alpha0 * growth * dt * (1.0 + 0.5 * x);
  return p.alpha0 * growth * std::expm1(x) / (4.0 * p.eta);
}

}  // namespace

double mmm_step(double s, double t, double dt, const MmmParams& p, std::span<const double, 4> z) {
  if (!(s >= 0.0)) throw std::domain_error("mmm_step: index level must be >= 0");
  if (dt == 0.0) return s;
  if (!(dt > 0.0)) throw std::domain_error("mmm_step: dt must be >= 0");
  const double dphi = time_change_increment(t, dt, p);
  const double shifted = z[0] + std::sqrt(s / dphi);
  return dphi * (shifted * shifted + z[1] * z[1] + z[2] * z[2] + z[3] * z[3]);
}

double model_step(const MarketModel& model, double s, double t, double dt, double r,
                  std::span<const double> z) {
  if (const auto* gbm = std::get_if<GbmParams>(&model)) return gbm_step(s, dt, *gbm, r, z[0]);
  return mmm_step(s, t, dt, std::get<MmmParams>(model), z.first<4>());
}

MmmParams calibrate_mmm(std::span<const PricePoint> prices, const CalibrationOptions& options) {
  if (prices.size() < 3) throw ConfigError("calibration needs at least 3 observations");
  if (!(options.window > 0.0)) throw ConfigError("calibration window must be > 0");
  for (std::size_t i = 0; i < prices.size(); ++i) {
    if (!(prices[i].level > 0.0)) throw ConfigError("calibration levels must be > 0");
    if (i > 0 && !(prices[i].t > prices[i - 1].t)) {
      throw ConfigError("calibration dates must be strictly increasing");
    }
  }

  const double start = prices.front().t;
  const double span = prices.back().t - start;
  const auto n_blocks = static_cast<std::size_t>(
      std::max(2.0, std::floor(span / options.window + 1e-9)));
  const double width = span / static_cast<double>(n_blocks);

  struct Block {
    double variation = 0.0;
    double begin = std::numeric_limits<double>::infinity();
    double end = -std::numeric_limits<double>::infinity();
  };
  std::vector<Block> blocks(n_blocks);
  double total = 0.0;
  for (std::size_t i = 1; i < prices.size(); ++i) {
    const double increment = std::sqrt(prices[i].level) - std::sqrt(prices[i - 1].level);
    const double sq = increment * increment;
    total += sq;
    const double mid = 0.5 * (prices[i].t + prices[i - 1].t) - start;
    auto b = static_cast<std::size_t>(mid / width);
    if (b >= n_blocks) b = n_blocks - 1;
    blocks[b].variation += sq;
    blocks[b].begin = std::min(blocks[b].begin, prices[i - 1].t);
    blocks[b].end = std::max(blocks[b].end, prices[i].t);
  }
  if (!(total > 0.0)) throw NumericalError("calibration failed: zero quadratic variation");

  // log(4 dQ/dt) = log α_0 + η t
  std::vector<double> ts;
  std::vector<double> ys;
  for (const Block& b : blocks) {
    if (!(b.variation > 0.0) || !(b.end > b.begin)) continue;
    ts.push_back(0.5 * (b.begin + b.end));
    ys.push_back(std::log(4.0 * b.variation / (b.end - b.begin)));
  }
  if (ts.size() < 2) {
    throw NumericalError("calibration failed: fewer than two blocks with positive variation");
  }
  const auto n = static_cast<double>(ts.size());
  double t_mean = 0.0;
  double y_mean = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    t_mean += ts[i] / n;
    y_mean += ys[i] / n;
  }
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    sxy += (ts[i] - t_mean) * (ys[i] - y_mean);
    sxx += (ts[i] - t_mean) * (ts[i] - t_mean);
  }
  if (!(sxx > 0.0)) throw NumericalError("calibration failed: blocks share one mid-time");

  MmmParams fitted;
  fitted.eta = sxy / sxx;
  // Dates are relative to the first observation.
  fitted.alpha0 = std::exp(y_mean - fitted.eta * (t_mean - start));
  fitted.s0 = prices.front().level;
  return fitted;
}

}  // namespace alm
