#pragma once

namespace alm {

/// Rebalanced one-period update of the actualized portfolio: the bond leg
/// earns nothing, the risky leg earns the index's gross return.
inline double portfolio_step(double assets, double phi, double gross_return) {
  return assets * (1.0 + phi * (gross_return - 1.0));
}

}  // namespace alm
