#ifndef PBEC_FITTING_HPP
#define PBEC_FITTING_HPP

#include <array>
#include <optional>
#include <vector>

#include "pbec/correlations.hpp"
#include "pbec/model.hpp"
#include "pbec/types.hpp"

namespace pbec::fitting {

struct FitResult {
  double c1 = 0, c2 = 0;
  double lambda_real = 0;  // GHz, <= 0
  double lambda_imag = 0;  // GHz, >= 0; zero when overdamped/degenerate
  double lambda_real_2 = 0;  // second real exponent (overdamped refit only)
  std::array<double, 16> covariance{};  // row-major 4x4 for (c1, c2, lr, li)
  double residual_norm = 0;
  correlations::DampingRegime regime = correlations::DampingRegime::underdamped;
  bool degenerate = false;  // constant-curve input

  double tau_c() const { return 1.0 / std::abs(lambda_real); }
  double omega2() const { return lambda_imag; }
};

/// Weighted least squares of the damped-cosine model to a g2 curve
/// (Levenberg-Marquardt trust region, numerically differenced Jacobian).
/// Auto initial guess: c1 = g2(0)-1, c2 = 0, lambda'' from the dominant DFT
/// frequency of g2-1, lambda' from a log-linear envelope fit. Non-oscillatory
/// data is refit with a two-real-exponential model and reported as overdamped.
FitResult fit_g2(const G2Curve& curve,
                 std::optional<std::array<double, 4>> initial = std::nullopt);

struct SweepRow {
  double n_infty;
  double gamma_up;
  double omega2;       // GHz
  double lambda_real;  // GHz
  double g2_zero;      // normal ordering
};

struct SweepTable {
  std::vector<SweepRow> rows;
};

/// For each target steady photon number: invert the pump, solve the moment
/// system, assemble the coupling matrix at its first moments, record the
/// eigenvalues and g2(0). Full numerical steady states throughout.
SweepTable sweep_omega2(const ModelParams& p, const std::vector<double>& n_list);

/// Mode-filter visibility: g2 -> 1 + V (g2 - 1), shape (and exponents) preserved.
G2Curve apply_visibility(const G2Curve& curve, double V);

void write_sweep_csv(std::ostream& out, const SweepTable& t);

}  // namespace pbec::fitting

#endif
