#ifndef PBEC_TYPES_HPP
#define PBEC_TYPES_HPP

#include <vector>

namespace pbec {

/// Operator ordering of the intensity correlation. "direct" is <n(t+tau)n(t)>/<n>^2;
/// "normal" subtracts the shot-noise self-term at tau = 0, g2(0) = (<n^2>-<n>)/<n>^2.
enum class Ordering { normal, direct };

/// Sampled second-order correlation function.
struct G2Curve {
  std::vector<double> tau;      // ns, increasing, starting at 0
  std::vector<double> g2;
  Ordering ordering = Ordering::normal;
  std::vector<double> std_err;  // optional, same length as g2 when present
};

}  // namespace pbec

#endif
