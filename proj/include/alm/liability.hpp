#pragma once

#include <span>
#include <string>
#include <vector>

namespace alm {

/// Annual rates use continuous compounding; money is in millions of euros.
struct EconomicParams {
  double r = 0.02;        // risk-free rate
  double gamma = 0.02;    // inflation
  double a_l = 0.026;     // long-term actualization factor
  double horizon = 20.0;  // years

  void validate() const;
};

struct Payment {
  double t = 0.0;       // years from study start
  double amount = 0.0;  // M€, nominal
};

struct CashflowSchedule {
  std::vector<Payment> payments;        // strictly increasing dates
  std::vector<double> constraint_dates; // strictly increasing dates

  double total() const;
  void validate() const;
};

/// Five-year aggregate of decommissioning charges starting at `year`.
struct Bucket {
  double year = 0.0;
  double total = 0.0;
};

enum class Spreading { kUniformMonthly };

/// Estimated charges per five-year period, 2015 through 2045.
std::vector<Bucket> default_buckets();

/// Spreads every bucket uniformly over its 60 monthly dates. The first
/// bucket's year is t = 0; constraint dates are semiannual over (0, T].
CashflowSchedule build_schedule(std::span<const Bucket> buckets, Spreading spreading,
                                const EconomicParams& econ);

/// Semiannual dates 0.5, 1.0, ... up to and including the horizon.
std::vector<double> semiannual_dates(double horizon);

/// L_t = e^{(γ−r)t} Σ_{t_j > t} D̂_j e^{−a_L (t_j − t)}.
double liability_value(const CashflowSchedule& schedule, double t, const EconomicParams& econ);

/// Minimal injection (L − A)^+ on constraint dates, zero otherwise.
double required_endowment(double assets, double liability, bool is_constraint_date);

/// Actualized value of the payments falling in (t0, t1]: Σ D̂_j e^{(γ−r)t_j}.
double actualized_outflow(const CashflowSchedule& schedule, double t0, double t1,
                          const EconomicParams& econ);

/// Precomputed per-step quantities shared by the solver and the simulator.
struct StepPlan {
  std::vector<double> times;       // n_steps + 1 dates, times[0] = 0
  std::vector<double> outflow;     // per step, actualized payments in (t_k, t_{k+1}]
  std::vector<double> liability;   // L at every date in `times`
  std::vector<char> constraint;    // per step, 1 if t_{k+1} is a constraint date

  std::size_t steps() const { return outflow.size(); }
};

/// Rebalancing dates k / steps_per_year over [0, T]. Throws ConfigError if
/// the horizon is not a whole number of steps.
StepPlan make_step_plan(const CashflowSchedule& schedule, const EconomicParams& econ,
                        int steps_per_year);

}  // namespace alm
