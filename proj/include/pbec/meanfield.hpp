#ifndef PBEC_MEANFIELD_HPP
#define PBEC_MEANFIELD_HPP

#include <array>
#include <utility>
#include <vector>

#include "pbec/model.hpp"

namespace pbec::meanfield {

struct MeanFieldState {
  double n = 0;     // expected condensate photon number
  double m_up = 0;  // expected excited-molecule number, 0 <= m_up <= M
};

struct TimeSeries {
  std::vector<double> times;  // ns, strictly increasing
  std::vector<MeanFieldState> states;
};

/// Coupled rate equations:
///   dn/dt = -kappa n - B_abs (M - m) n + B_em (n + 1) m
///   dm/dt = Gamma_up (M - m) - Gamma_down m + B_abs (M - m) n - B_em (n + 1) m
std::pair<double, double> mean_field_rhs(const MeanFieldState& s, const ModelParams& p);

/// Row-major 2x2 Jacobian d(dn,dm)/d(n,m); also the linearization used by the
/// correlation dynamics when evaluated at the steady state.
std::array<double, 4> mean_field_jacobian(const MeanFieldState& s, const ModelParams& p);

/// Adaptive RK45 time evolution; switches to a semi-implicit integrator if the
/// explicit one underflows its step size. States are recorded at accepted steps.
TimeSeries integrate(const ModelParams& p, MeanFieldState initial, double t_end,
                     double rel_tol = 1e-9, double abs_tol = 1e-12);

/// Steady state on the physical branch (n >= 0, 0 <= m_up <= M) by damped
/// Newton with analytic Jacobian; falls back to long-time integration if
/// Newton leaves the physical box. Residual norm < 1e-10 max(kappa, Gamma_up) M.
MeanFieldState steady_state(const ModelParams& p);

/// Leading large-M expressions:
///   n   = M (B_em G_up - B_abs G_down) / (kappa (B_em + B_abs))
///   m_up = (M B_abs + kappa) / (B_abs + B_em)
MeanFieldState steady_state_closed_form(const ModelParams& p);

/// Pump rate whose steady state has the requested photon number (relative
/// accuracy 1e-8), by bracketing around the closed-form inversion.
double pump_for_target_n(const ModelParams& p, double n_target);

void write_timeseries_csv(std::ostream& out, const TimeSeries& ts);

}  // namespace pbec::meanfield

#endif
