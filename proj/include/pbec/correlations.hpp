#ifndef PBEC_CORRELATIONS_HPP
#define PBEC_CORRELATIONS_HPP

#include <vector>

#include "pbec/meanfield.hpp"
#include "pbec/model.hpp"
#include "pbec/moments.hpp"
#include "pbec/types.hpp"

namespace pbec::correlations {

/// Linear system d/dtau (dg_n, dg_nm) = A (dg_n, dg_nm) with
///   a11 = -kappa - Gt_M, a12 = Gt_n, a21 = Gt_M, a22 = -(G_up + G_down) - Gt_n,
///   Gt_M = B_abs (M - <M_up>) - B_em <M_up>,  Gt_n = B_abs <n> + B_em (<n> + 1).
struct CouplingMatrix {
  double a11, a12, a21, a22;
  double gamma_tilde_M() const { return a21; }
  double gamma_tilde_n() const { return a12; }
};

enum class DampingRegime { underdamped, critical, overdamped };

/// 2 gamma = -(trace), omega0^2 = det, eigenvalues lambda = -gamma +- sqrt(gamma^2 - omega0^2).
/// For the underdamped case lambda_real = -gamma, lambda_imag = sqrt(omega0^2 - gamma^2);
/// overdamped stores the slow (dominant) real eigenvalue, the other one is
/// -2 gamma - lambda_real.
struct EigenResult {
  double gamma;
  double omega0_sq;
  double lambda_real;
  double lambda_imag;
  DampingRegime regime;
};

/// Matrix elements evaluated at the given steady occupations. Gt_M is a near
/// cancellation of two O(M B_abs) terms; accumulated in extended precision.
CouplingMatrix coupling_matrix(const ModelParams& p, const meanfield::MeanFieldState& ss);

EigenResult eigen(const CouplingMatrix& a);

/// Closed-form leading-order eigenvalues for Gamma_down = 0:
///   lambda = -M Gu B_em / (2 kappa) +- (1/2) sqrt((M Gu B_em/kappa)^2 - 4 M Gu B_em).
/// Illustrative only; not used in the data-analysis path.
EigenResult eigen_approx(const ModelParams& p);

/// g2(tau) = 1 + dg_n(tau)/<n>^2 with initial conditions from steady-state
/// second moments and evolution under the coupling matrix evaluated at the
/// moment solution's first moments. Closed-form (eigen decomposition) path.
G2Curve g2_curve(const ModelParams& p, const moments::MomentState& mom,
                 const std::vector<double>& tau_grid, Ordering ordering = Ordering::normal);

/// Same dynamics integrated numerically (RK45) -- the method-equivalence
/// counterpart of g2_curve.
G2Curve g2_curve_ode(const ModelParams& p, const moments::MomentState& mom,
                     const std::vector<double>& tau_grid, Ordering ordering = Ordering::normal);

/// Model: g2(tau) = 1 + exp(lambda' tau) [c1 cos(lambda'' tau) + c2 sin(lambda'' tau)].
double model_function(double c1, double c2, double lambda_real, double lambda_imag, double tau);

}  // namespace pbec::correlations

#endif
