#ifndef PBEC_MOMENTS_HPP
#define PBEC_MOMENTS_HPP

#include <array>

#include "pbec/meanfield.hpp"
#include "pbec/model.hpp"
#include "pbec/types.hpp"

namespace pbec::moments {

/// First and second moments of the (photon, excited-molecule) pair.
struct MomentState {
  double n = 0;     // <n>
  double m_up = 0;  // <M_up>
  double n2 = 0;    // <n^2>
  double nm = 0;    // <n M_up>
  double m2 = 0;    // <M_up^2>
};

/// Time derivative of all five components. First moments evolve with the exact
/// (unfactorized) coupling to <n M_up>; the three second-moment equations close
/// the hierarchy with the cluster expansion
///   <n M_up^2> = 2<M_up><n M_up> + <n><M_up^2> - 2<n><M_up>^2
/// and its <n^2 M_up> analogue.
std::array<double, 5> moment_rhs(const MomentState& s, const ModelParams& p);

/// Sum of absolute term magnitudes per equation, for relative residual checks.
std::array<double, 5> moment_rhs_scale(const MomentState& s, const ModelParams& p);

struct MomentSolution {
  MomentState moments;
  bool closure_reliable = true;  // false below threshold (steady <n> small)
  double residual = 0;           // max over equations of |rhs| / scale
};

/// Steady state of the five-moment system. Outer damped Newton on the first
/// moments (warm-started from meanfield::steady_state), inner exact 3x3 linear
/// solve for the second moments, which enter the closed equations linearly.
MomentSolution moment_steady_state(const ModelParams& p);

/// Second moments for prescribed first moments (the inner linear solve).
std::array<double, 3> second_moments_given_first(double n, double m_up, const ModelParams& p);

/// g2(0) from moments: direct <n^2>/<n>^2, normal (<n^2>-<n>)/<n>^2.
double g2_zero(const MomentState& s, Ordering ordering);

}  // namespace pbec::moments

#endif
