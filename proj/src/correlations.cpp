#include "pbec/correlations.hpp"

#include <cmath>

#include "pbec/errors.hpp"
#include "pbec/ode.hpp"

namespace pbec::correlations {

CouplingMatrix coupling_matrix(const ModelParams& p, const meanfield::MeanFieldState& ss) {
  // Gt_M = B_abs (M - m) - B_em m: two O(M B_abs) summands cancelling to O(kappa)
  long double m = ss.m_up, n = ss.n;
  long double GtM = (long double)p.B_abs * ((long double)p.M - m) - (long double)p.B_em * m;
  long double Gtn = (long double)p.B_abs * n + (long double)p.B_em * (n + 1);
  CouplingMatrix a;
  a.a11 = (double)(-(long double)p.kappa - GtM);
  a.a12 = (double)Gtn;
  a.a21 = (double)GtM;
  a.a22 = (double)(-(long double)p.gamma_up - (long double)p.gamma_down - Gtn);
  return a;
}

EigenResult eigen(const CouplingMatrix& a) {
  EigenResult r;
  r.gamma = -0.5 * (a.a11 + a.a22);
  r.omega0_sq = a.a11 * a.a22 - a.a12 * a.a21;
  double disc = r.gamma * r.gamma - r.omega0_sq;
  double band = 1e-12 * r.gamma * r.gamma;
  if (std::abs(disc) <= band) {
    r.regime = DampingRegime::critical;
    r.lambda_real = -r.gamma;
    r.lambda_imag = 0;
  } else if (disc < 0) {
    r.regime = DampingRegime::underdamped;
    r.lambda_real = -r.gamma;
    r.lambda_imag = std::sqrt(-disc);
  } else {
    r.regime = DampingRegime::overdamped;
    r.lambda_real = -r.gamma + std::sqrt(disc);  // slow branch
    r.lambda_imag = 0;
  }
  return r;
}

EigenResult eigen_approx(const ModelParams& p) {
  double x = p.M * p.gamma_up * p.B_em;  // omega0^2
  if (!(p.kappa > 0)) throw ValidationError("kappa", "must be > 0 for the approximate form");
  EigenResult r;
  r.gamma = x / (2 * p.kappa);
  r.omega0_sq = x;
  double disc = r.gamma * r.gamma - x;
  if (std::abs(disc) <= 1e-12 * r.gamma * r.gamma) {
    r.regime = DampingRegime::critical;
    r.lambda_real = -r.gamma;
    r.lambda_imag = 0;
  } else if (disc < 0) {
    r.regime = DampingRegime::underdamped;
    r.lambda_real = -r.gamma;
    r.lambda_imag = std::sqrt(-disc);
  } else {
    r.regime = DampingRegime::overdamped;
    r.lambda_real = -r.gamma + std::sqrt(disc);
    r.lambda_imag = 0;
  }
  return r;
}

namespace {

struct InitialVector {
  double dg_n, dg_nm, n_inf;
};

InitialVector initial_vector(const moments::MomentState& mom, Ordering ordering) {
  if (!(mom.n > 0)) throw ValidationError("n", "g2 undefined for <n> = 0");
  InitialVector v;
  v.n_inf = mom.n;
  v.dg_n = mom.n2 - mom.n * mom.n;
  if (ordering == Ordering::normal) v.dg_n -= mom.n;
  v.dg_nm = mom.nm - mom.n * mom.m_up;
  return v;
}

void check_grid(const std::vector<double>& tau) {
  if (tau.empty()) throw ValidationError("tau_grid", "must not be empty");
  if (tau.front() != 0.0) throw ValidationError("tau_grid", "must start at 0");
  for (std::size_t i = 1; i < tau.size(); ++i)
    if (!(tau[i] > tau[i - 1])) throw ValidationError("tau_grid", "must be increasing");
}

}  // namespace

G2Curve g2_curve(const ModelParams& p, const moments::MomentState& mom,
                 const std::vector<double>& tau_grid, Ordering ordering) {
  check_grid(tau_grid);
  auto v0 = initial_vector(mom, ordering);
  CouplingMatrix a = coupling_matrix(p, {mom.n, mom.m_up});
  EigenResult eg = eigen(a);
  const double n2inf = v0.n_inf * v0.n_inf;
  // velocity of dg_n at tau = 0
  const double vdot0 = a.a11 * v0.dg_n + a.a12 * v0.dg_nm;

  G2Curve out;
  out.ordering = ordering;
  out.tau = tau_grid;
  out.g2.reserve(tau_grid.size());
  for (double t : tau_grid) {
    double dgn;
    switch (eg.regime) {
      case DampingRegime::underdamped: {
        double d2 = (vdot0 + eg.gamma * v0.dg_n) / eg.lambda_imag;
        dgn = std::exp(-eg.gamma * t) *
              (v0.dg_n * std::cos(eg.lambda_imag * t) + d2 * std::sin(eg.lambda_imag * t));
        break;
      }
      case DampingRegime::critical: {
        // degenerate branch (c1 + c~ tau) e^{-gamma tau}; avoids the 0/0 of cos/sin
        double ctil = vdot0 + eg.gamma * v0.dg_n;
        dgn = (v0.dg_n + ctil * t) * std::exp(-eg.gamma * t);
        break;
      }
      case DampingRegime::overdamped: {
        double s = std::sqrt(eg.gamma * eg.gamma - eg.omega0_sq);
        double lp = -eg.gamma + s, lm = -eg.gamma - s;
        double Ap = (vdot0 - lm * v0.dg_n) / (lp - lm);
        double Am = v0.dg_n - Ap;
        dgn = Ap * std::exp(lp * t) + Am * std::exp(lm * t);
        break;
      }
      default:
        dgn = 0;
    }
    out.g2.push_back(1.0 + dgn / n2inf);
  }
  return out;
}

G2Curve g2_curve_ode(const ModelParams& p, const moments::MomentState& mom,
                     const std::vector<double>& tau_grid, Ordering ordering) {
  check_grid(tau_grid);
  auto v0 = initial_vector(mom, ordering);
  CouplingMatrix a = coupling_matrix(p, {mom.n, mom.m_up});
  const double n2inf = v0.n_inf * v0.n_inf;

  ode::Options opt;
  opt.rel_tol = 1e-13;
  opt.abs_tol = 1e-16 * (std::abs(v0.dg_n) + std::abs(v0.dg_nm) + 1);
  auto rhs = [&](double, const ode::State<2>& y, ode::State<2>& dy) {
    dy[0] = a.a11 * y[0] + a.a12 * y[1];
    dy[1] = a.a21 * y[0] + a.a22 * y[1];
  };

  G2Curve out;
  out.ordering = ordering;
  out.tau = tau_grid;
  out.g2.reserve(tau_grid.size());
  ode::State<2> y{v0.dg_n, v0.dg_nm};
  out.g2.push_back(1.0 + y[0] / n2inf);
  for (std::size_t i = 1; i < tau_grid.size(); ++i) {
    ode::integrate_rk45<2>(rhs, y, tau_grid[i - 1], tau_grid[i], opt,
                           [](double, const ode::State<2>&) {});
    out.g2.push_back(1.0 + y[0] / n2inf);
  }
  return out;
}

double model_function(double c1, double c2, double lambda_real, double lambda_imag, double tau) {
  return 1.0 +
         std::exp(lambda_real * tau) *
             (c1 * std::cos(lambda_imag * tau) + c2 * std::sin(lambda_imag * tau));
}

}  // namespace pbec::correlations
