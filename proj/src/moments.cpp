#include "pbec/moments.hpp"

#include <algorithm>
#include <cmath>

#include "pbec/errors.hpp"

namespace pbec::moments {

namespace {

struct Terms {
  double value = 0;
  double scale = 0;
  void add(double t) {
    value += t;
    scale += std::abs(t);
  }
};

// All five right-hand sides with per-equation magnitude scales.
void rhs_terms(const MomentState& s, const ModelParams& p, std::array<Terms, 5>& eq) {
  const double M = p.M, kap = p.kappa, Gu = p.gamma_up, Gd = p.gamma_down;
  const double Ba = p.B_abs, Be = p.B_em;
  const double n = s.n, m = s.m_up, n2 = s.n2, nm = s.nm, m2 = s.m2;

  // d<n>/dt, d<M_up>/dt with the exact <n M_up> coupling
  eq[0].add(-kap * n);
  eq[0].add(-Ba * (M * n - nm));
  eq[0].add(Be * (nm + m));

  eq[1].add(Gu * (M - m));
  eq[1].add(-Gd * m);
  eq[1].add(Ba * (M * n - nm));
  eq[1].add(-Be * (nm + m));

  // d<n^2>/dt
  eq[2].add(kap * (n - 2 * n2));
  eq[2].add(-Ba * (2 * n2 * (M - m) + 4 * m * n * n - 4 * n * nm - (M * n - nm)));
  eq[2].add(Be * (4 * n * nm + 2 * m * n2 - 4 * m * n * n + 3 * nm + m));

  // d<n M_up>/dt
  eq[3].add(-kap * nm);
  eq[3].add(Gu * (M * n - nm));
  eq[3].add(-Gd * nm);
  eq[3].add(Ba * (2 * m * n * (n - m) - M * (n + nm) + n * m2 + 2 * (m - n + 0.5) * nm +
                  (M - m) * n2));
  eq[3].add(Be * (2 * m * n * (n - m) - m + (n + 1) * m2 + 2 * (m - n - 1) * nm - m * n2));

  // d<M_up^2>/dt
  eq[4].add(2 * Gu * (M * m + M - m - m2));
  eq[4].add(Gd * (m - 2 * m2));
  eq[4].add(Ba * ((2 * M - 1) * nm + M * n - 4 * m * nm - 2 * n * m2 + 4 * n * m * m));
  eq[4].add(-Be * (4 * m * nm + 2 * n * m2 - 4 * n * m * m + 2 * m2 - (n + 1) * m));
}

}  // namespace

std::array<double, 5> moment_rhs(const MomentState& s, const ModelParams& p) {
  std::array<Terms, 5> eq{};
  rhs_terms(s, p, eq);
  return {eq[0].value, eq[1].value, eq[2].value, eq[3].value, eq[4].value};
}

std::array<double, 5> moment_rhs_scale(const MomentState& s, const ModelParams& p) {
  std::array<Terms, 5> eq{};
  rhs_terms(s, p, eq);
  return {eq[0].scale, eq[1].scale, eq[2].scale, eq[3].scale, eq[4].scale};
}

std::array<double, 3> second_moments_given_first(double n, double m_up, const ModelParams& p) {
  // the closed second-moment equations are affine in (n2, nm, m2):
  // columns from unit vectors, constant from the zero vector
  MomentState s{n, m_up, 0, 0, 0};
  auto base = moment_rhs(s, p);
  double A[3][3];
  for (int j = 0; j < 3; ++j) {
    MomentState e = s;
    (j == 0 ? e.n2 : j == 1 ? e.nm : e.m2) = 1.0;
    auto r = moment_rhs(e, p);
    for (int i = 0; i < 3; ++i) A[i][j] = r[i + 2] - base[i + 2];
  }
  double b[3] = {-base[2], -base[3], -base[4]};

  // 3x3 Gauss with partial pivoting
  int idx[3] = {0, 1, 2};
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int i = col + 1; i < 3; ++i)
      if (std::abs(A[idx[i]][col]) > std::abs(A[idx[piv]][col])) piv = i;
    std::swap(idx[col], idx[piv]);
    double d = A[idx[col]][col];
    if (d == 0) throw ConvergenceError("second-moment system singular");
    for (int i = col + 1; i < 3; ++i) {
      double f = A[idx[i]][col] / d;
      for (int j = col; j < 3; ++j) A[idx[i]][j] -= f * A[idx[col]][j];
      b[idx[i]] -= f * b[idx[col]];
    }
  }
  std::array<double, 3> x{};
  for (int i = 2; i >= 0; --i) {
    double sum = b[idx[i]];
    for (int j = i + 1; j < 3; ++j) sum -= A[idx[i]][j] * x[j];
    x[i] = sum / A[idx[i]][i];
  }
  return x;
}

MomentSolution moment_steady_state(const ModelParams& p) {
  if (p.gamma_up == 0 && p.kappa == 0)
    throw ValidationError("params", "gamma_up = kappa = 0 has no unique moment steady state");

  meanfield::MeanFieldState mf = meanfield::steady_state(p);
  double n = std::max(mf.n, 1e-12), m = std::clamp(mf.m_up, 0.0, p.M);

  auto first_residual = [&](double nn, double mm, std::array<double, 3>& sec) {
    sec = second_moments_given_first(nn, mm, p);
    MomentState s{nn, mm, sec[0], sec[1], sec[2]};
    auto r = moment_rhs(s, p);
    return std::array<double, 2>{r[0], r[1]};
  };

  std::array<double, 3> sec{};
  for (int it = 0; it < 120; ++it) {
    auto r = first_residual(n, m, sec);
    auto sc = moment_rhs_scale({n, m, sec[0], sec[1], sec[2]}, p);
    double rel = std::max(std::abs(r[0]) / std::max(sc[0], 1e-300),
                          std::abs(r[1]) / std::max(sc[1], 1e-300));
    if (rel < 1e-13) break;
    double hn = std::max(std::abs(n), 1.0) * 1e-7;
    double hm = std::max(std::abs(m), 1.0) * 1e-7;
    std::array<double, 3> tmp{};
    auto rn = first_residual(n + hn, m, tmp);
    auto rm = first_residual(n, m + hm, tmp);
    double J11 = (rn[0] - r[0]) / hn, J12 = (rm[0] - r[0]) / hm;
    double J21 = (rn[1] - r[1]) / hn, J22 = (rm[1] - r[1]) / hm;
    double det = J11 * J22 - J12 * J21;
    if (det == 0) throw ConvergenceError("moment_steady_state: singular Jacobian");
    double dn = (-r[0] * J22 + r[1] * J12) / det;
    double dm = (-r[1] * J11 + r[0] * J21) / det;
    double lam = 1.0;
    while ((n + lam * dn <= 0 || m + lam * dm < 0 || m + lam * dm > p.M) && lam > 1e-10) lam /= 2;
    if (lam <= 1e-10) throw ConvergenceError("moment_steady_state: left physical box");
    n += lam * dn;
    m += lam * dm;
  }

  MomentSolution sol;
  sol.moments = {n, m, sec[0], sec[1], sec[2]};
  auto r = moment_rhs(sol.moments, p);
  auto sc = moment_rhs_scale(sol.moments, p);
  double rel = 0;
  for (int i = 0; i < 5; ++i) rel = std::max(rel, std::abs(r[i]) / std::max(sc[i], 1e-300));
  sol.residual = rel;
  if (rel > 1e-8) throw ConvergenceError("moment_steady_state: residual above 1e-8 of term scale");
  // cluster closure is trustworthy only above threshold (steady <n> >> 1)
  sol.closure_reliable = (n >= 10.0);
  return sol;
}

double g2_zero(const MomentState& s, Ordering ordering) {
  if (!(s.n > 0)) throw ValidationError("n", "g2(0) undefined for <n> = 0");
  double num = (ordering == Ordering::direct) ? s.n2 : s.n2 - s.n;
  return num / (s.n * s.n);
}

}  // namespace pbec::moments
