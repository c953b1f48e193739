#pragma once

#include <array>
#include <limits>
#include <span>
#include <string_view>
#include <variant>

namespace alm {

/// Black-Scholes dynamics of the actualized index: dS = S((μ − r)dt + σ dW).
struct GbmParams {
  double mu = 0.07;
  double sigma = 0.18;
  double s0 = 1.0;

  void validate() const;
};

/// Minimal Market Model: dS = α_t dt + sqrt(S α_t) dW with α_t = α_0 e^{ηt}.
/// There is no sensible default for s0; it must be supplied.
struct MmmParams {
  double alpha0 = 2.317;
  double eta = 0.0542;
  double s0 = std::numeric_limits<double>::quiet_NaN();

  double alpha(double t) const;
  void validate() const;
};

using MarketModel = std::variant<GbmParams, MmmParams>;

enum class ModelKind { kBlackScholes, kMmm };

ModelKind kind_of(const MarketModel& model);
double initial_level(const MarketModel& model);
std::string_view model_name(ModelKind kind);

/// Exact lognormal transition of the actualized index over dt.
double gbm_step(double s, double dt, const GbmParams& p, double r, double z);

/// φ(t) = ∫_0^t α_s / 4 ds = α_0 (e^{ηt} − 1) / (4η).
double mmm_time_change(double t, const MmmParams& p);

/// Exact transition of the time-changed BESQ-4 process: with Δφ the
/// increment of the time change and λ = s / Δφ the result is
/// Δφ [(z₁ + √λ)² + z₂² + z₃² + z₄²].
double mmm_step(double s, double t, double dt, const MmmParams& p, std::span<const double, 4> z);

/// Number of standard normals one transition of the model consumes.
constexpr std::size_t draws_per_step(ModelKind kind) {
  return kind == ModelKind::kMmm ? 4 : 1;
}

/// Advances the index by one step using draws_per_step(kind) normals.
double model_step(const MarketModel& model, double s, double t, double dt, double r,
                  std::span<const double> z);

struct PricePoint {
  double t = 0.0;  // years
  double level = 0.0;
};

struct CalibrationOptions {
  double window = 1.0;  // years per quadratic-variation block
};

/// Fits (α_0, η) from the realized quadratic variation of sqrt(S): the
/// slope of the cumulative variation estimates α_t / 4 block by block and
/// log α_t is regressed on the block mid-times. s0 is set to the first level.
MmmParams calibrate_mmm(std::span<const PricePoint> prices, const CalibrationOptions& options = {});

}  // namespace alm
