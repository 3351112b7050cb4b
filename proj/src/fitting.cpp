#include "pbec/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>

#include "pbec/constants.hpp"
#include "pbec/errors.hpp"
#include "pbec/io.hpp"

namespace pbec::fitting {

namespace {

using Params4 = std::array<double, 4>;
using ModelFn = std::function<double(const Params4&, double)>;

double damped_cosine(const Params4& q, double t) {
  return 1.0 + std::exp(q[2] * t) * (q[0] * std::cos(q[3] * t) + q[1] * std::sin(q[3] * t));
}

double two_exponential(const Params4& q, double t) {
  // 1 + a e^{l1 t} + b e^{l2 t}
  return 1.0 + q[0] * std::exp(q[2] * t) + q[1] * std::exp(q[3] * t);
}

struct LmFit {
  Params4 q;
  std::array<double, 16> cov;
  double residual_norm;
  bool converged;
};

// 4x4 solve, returns false if singular
bool solve4(std::array<double, 16> A, Params4& b) {
  int idx[4] = {0, 1, 2, 3};
  for (int col = 0; col < 4; ++col) {
    int piv = col;
    for (int i = col + 1; i < 4; ++i)
      if (std::abs(A[idx[i] * 4 + col]) > std::abs(A[idx[piv] * 4 + col])) piv = i;
    std::swap(idx[col], idx[piv]);
    double d = A[idx[col] * 4 + col];
    if (d == 0) return false;
    for (int i = col + 1; i < 4; ++i) {
      double f = A[idx[i] * 4 + col] / d;
      for (int j = col; j < 4; ++j) A[idx[i] * 4 + j] -= f * A[idx[col] * 4 + j];
      b[idx[i]] -= f * b[idx[col]];
    }
  }
  Params4 x{};
  for (int i = 3; i >= 0; --i) {
    double s = b[idx[i]];
    for (int j = i + 1; j < 4; ++j) s -= A[idx[i] * 4 + j] * x[j];
    x[i] = s / A[idx[i] * 4 + i];
  }
  b = x;
  return true;
}

bool invert4(const std::array<double, 16>& A, std::array<double, 16>& inv) {
  for (int col = 0; col < 4; ++col) {
    Params4 e{};
    e[col] = 1.0;
    if (!solve4(A, e)) return false;
    for (int i = 0; i < 4; ++i) inv[i * 4 + col] = e[i];
  }
  return true;
}

LmFit levenberg_marquardt(const ModelFn& model, const std::vector<double>& t,
                          const std::vector<double>& y, const std::vector<double>& w,
                          Params4 q0) {
  const std::size_t n = t.size();
  auto residuals = [&](const Params4& q, std::vector<double>& r) {
    double ssq = 0;
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = w[i] * (model(q, t[i]) - y[i]);
      ssq += r[i] * r[i];
    }
    return ssq;
  };

  std::vector<double> r(n), rt(n);
  std::vector<std::array<double, 4>> J(n);
  double ssq = residuals(q0, r);
  double mu = 1e-3;
  bool converged = false;

  for (int iter = 0; iter < 400 && !converged; ++iter) {
    // numerically differenced Jacobian (forward)
    for (int j = 0; j < 4; ++j) {
      Params4 qh = q0;
      double h = 1e-7 * std::max(std::abs(q0[j]), 1e-4);
      qh[j] += h;
      residuals(qh, rt);
      for (std::size_t i = 0; i < n; ++i) J[i][j] = (rt[i] - r[i]) / h;
    }
    std::array<double, 16> JtJ{};
    Params4 Jtr{};
    for (std::size_t i = 0; i < n; ++i) {
      for (int a = 0; a < 4; ++a) {
        Jtr[a] += J[i][a] * r[i];
        for (int b = a; b < 4; ++b) JtJ[a * 4 + b] += J[i][a] * J[i][b];
      }
    }
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < a; ++b) JtJ[a * 4 + b] = JtJ[b * 4 + a];

    double gnorm = 0;
    for (int a = 0; a < 4; ++a) gnorm = std::max(gnorm, std::abs(Jtr[a]));
    if (gnorm < 1e-12) {
      converged = true;
      break;
    }

    bool accepted = false;
    for (int tries = 0; tries < 60 && !accepted; ++tries) {
      std::array<double, 16> A = JtJ;
      for (int a = 0; a < 4; ++a) A[a * 4 + a] += mu * std::max(JtJ[a * 4 + a], 1e-30);
      Params4 step{-Jtr[0], -Jtr[1], -Jtr[2], -Jtr[3]};
      if (!solve4(A, step)) {
        mu *= 10;
        continue;
      }
      Params4 qn = q0;
      double relstep = 0;
      for (int a = 0; a < 4; ++a) {
        qn[a] += step[a];
        relstep = std::max(relstep, std::abs(step[a]) / std::max(std::abs(q0[a]), 1e-8));
      }
      double ssq_n = residuals(qn, rt);
      if (std::isfinite(ssq_n) && ssq_n <= ssq) {
        q0 = qn;
        std::swap(r, rt);
        ssq = ssq_n;
        mu = std::max(mu * 0.3, 1e-14);
        accepted = true;
        if (relstep < 1e-10) converged = true;
      } else {
        mu *= 10;
      }
    }
    if (!accepted) {
      converged = true;  // no downhill direction left at any damping
    }
  }

  LmFit out;
  out.q = q0;
  out.residual_norm = std::sqrt(ssq);
  out.converged = converged;
  // covariance: s^2 (J^T J)^-1 at the solution
  std::array<double, 16> JtJ{};
  for (int j = 0; j < 4; ++j) {
    Params4 qh = q0;
    double h = 1e-7 * std::max(std::abs(q0[j]), 1e-4);
    qh[j] += h;
    residuals(qh, rt);
    for (std::size_t i = 0; i < n; ++i) J[i][j] = (rt[i] - r[i]) / h;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) JtJ[a * 4 + b] += J[i][a] * J[i][b];
  std::array<double, 16> inv{};
  if (n > 4 && invert4(JtJ, inv)) {
    double s2 = ssq / (double)(n - 4);
    for (auto& v : inv) v *= s2;
    out.cov = inv;
  }
  return out;
}

/// dominant nonzero frequency of y on a uniform grid (plain DFT magnitude scan)
double dominant_frequency(const std::vector<double>& t, const std::vector<double>& y) {
  const std::size_t n = y.size();
  if (n < 8) return 0;
  double dt = (t.back() - t.front()) / (double)(n - 1);
  std::size_t best = 0;
  double best_mag = 0;
  for (std::size_t j = 1; j <= n / 2; ++j) {
    double re = 0, im = 0;
    for (std::size_t k = 0; k < n; ++k) {
      double ph = 2.0 * constants::pi * (double)j * (double)k / (double)n;
      re += y[k] * std::cos(ph);
      im -= y[k] * std::sin(ph);
    }
    double mag = re * re + im * im;
    if (mag > best_mag) {
      best_mag = mag;
      best = j;
    }
  }
  // DC-dominated (overdamped) signals: compare against the zero-frequency power
  double dc = 0;
  for (double v : y) dc += v;
  if (best_mag < 0.25 * dc * dc) return 0;
  return 2.0 * constants::pi * (double)best / ((double)n * dt);
}

/// log-linear decay rate of the |y| envelope through its local maxima
double envelope_rate(const std::vector<double>& t, const std::vector<double>& y) {
  std::vector<double> ts, ls;
  for (std::size_t i = 1; i + 1 < y.size(); ++i) {
    double a = std::abs(y[i]);
    if (a > std::abs(y[i - 1]) && a >= std::abs(y[i + 1]) && a > 0) {
      ts.push_back(t[i]);
      ls.push_back(std::log(a));
    }
  }
  if (std::abs(y[0]) > 0) {
    ts.insert(ts.begin(), t[0]);
    ls.insert(ls.begin(), std::log(std::abs(y[0])));
  }
  if (ts.size() >= 2) {
    double mt = 0, ml = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      mt += ts[i];
      ml += ls[i];
    }
    mt /= (double)ts.size();
    ml /= (double)ts.size();
    double num = 0, den = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      num += (ts[i] - mt) * (ls[i] - ml);
      den += (ts[i] - mt) * (ts[i] - mt);
    }
    if (den > 0 && num / den < 0) return num / den;
  }
  // fallback: time where |y| first drops below |y(0)|/e
  double y0 = std::abs(y[0]);
  for (std::size_t i = 1; i < y.size(); ++i)
    if (std::abs(y[i]) < y0 * 0.36787944117144233) return -1.0 / std::max(t[i], 1e-12);
  return -1.0 / std::max(t.back(), 1e-12);
}

}  // namespace

FitResult fit_g2(const G2Curve& curve, std::optional<std::array<double, 4>> initial) {
  const std::size_t n = curve.tau.size();
  if (n < 8 || curve.g2.size() != n)
    throw ValidationError("curve", "need at least 8 (tau, g2) points");

  std::vector<double> w(n, 1.0);
  if (!curve.std_err.empty()) {
    for (std::size_t i = 0; i < n; ++i)
      w[i] = (curve.std_err[i] > 0) ? 1.0 / curve.std_err[i] : 1.0;
  }
  std::vector<double> y(n);
  double dev = 0;
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = curve.g2[i] - 1.0;
    dev = std::max(dev, std::abs(y[i] - y[0]));
  }

  FitResult res;
  if (dev < 1e-14 * (1.0 + std::abs(y[0]))) {
    // constant curve: pure-decay placeholder, flagged
    res.c1 = y[0];
    res.c2 = 0;
    res.lambda_real = 0;
    res.lambda_imag = 0;
    res.degenerate = true;
    res.regime = correlations::DampingRegime::overdamped;
    return res;
  }

  Params4 q0;
  if (initial) {
    q0 = *initial;
  } else {
    double li0 = dominant_frequency(curve.tau, y);
    double lr0 = envelope_rate(curve.tau, y);
    q0 = {y[0], 0.0, lr0, li0};
  }

  LmFit lm = levenberg_marquardt(damped_cosine, curve.tau, curve.g2, w, q0);

  // fold sign conventions: lambda'' >= 0 (model is even under (li, c2) -> (-li, -c2))
  if (lm.q[3] < 0) {
    lm.q[3] = -lm.q[3];
    lm.q[1] = -lm.q[1];
  }

  bool oscillatory = lm.q[3] > 1e-6 * std::abs(lm.q[2]);
  if (!oscillatory) {
    // overdamped: refit with two real exponentials
    Params4 q2 = {lm.q[0], y[0] - lm.q[0], std::min(lm.q[2], -1e-8), std::min(lm.q[2], -1e-8) * 3};
    LmFit lm2 = levenberg_marquardt(two_exponential, curve.tau, curve.g2, w, q2);
    if (lm2.residual_norm <= lm.residual_norm * (1 + 1e-9)) {
      res.regime = correlations::DampingRegime::overdamped;
      double l1 = lm2.q[2], l2 = lm2.q[3];
      double a = lm2.q[0], b = lm2.q[1];
      if (l1 < l2) {
        std::swap(l1, l2);
        std::swap(a, b);
      }
      res.c1 = a;
      res.c2 = b;
      res.lambda_real = l1;  // slow branch
      res.lambda_real_2 = l2;
      res.lambda_imag = 0;
      res.covariance = lm2.cov;
      res.residual_norm = lm2.residual_norm;
      if (!(res.lambda_real <= 0)) throw ConvergenceError("fit_g2: positive decay exponent");
      return res;
    }
  }

  if (!lm.converged) throw ConvergenceError("fit_g2: Levenberg-Marquardt did not converge");
  res.c1 = lm.q[0];
  res.c2 = lm.q[1];
  res.lambda_real = lm.q[2];
  res.lambda_imag = lm.q[3];
  res.covariance = lm.cov;
  res.residual_norm = lm.residual_norm;
  res.regime = oscillatory ? correlations::DampingRegime::underdamped
                           : correlations::DampingRegime::overdamped;
  if (!(res.lambda_real <= 0)) throw ConvergenceError("fit_g2: positive decay exponent");
  return res;
}

SweepTable sweep_omega2(const ModelParams& p, const std::vector<double>& n_list) {
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    if (!(n_list[i] > 0)) throw ValidationError("n_list", "entries must be > 0");
    if (i > 0 && !(n_list[i] > n_list[i - 1]))
      throw ValidationError("n_list", "must be increasing");
  }
  SweepTable t;
  t.rows.reserve(n_list.size());
  for (double n_target : n_list) {
    ModelParams q = p;
    q.gamma_up = meanfield::pump_for_target_n(p, n_target);
    auto sol = moments::moment_steady_state(q);
    auto a = correlations::coupling_matrix(q, {sol.moments.n, sol.moments.m_up});
    auto eg = correlations::eigen(a);
    SweepRow row;
    row.n_infty = n_target;
    row.gamma_up = q.gamma_up;
    row.omega2 = eg.lambda_imag;
    row.lambda_real = eg.lambda_real;
    row.g2_zero = moments::g2_zero(sol.moments, Ordering::normal);
    t.rows.push_back(row);
  }
  return t;
}

G2Curve apply_visibility(const G2Curve& curve, double V) {
  if (!(V > 0) || V > 1) throw ValidationError("V", "visibility must be in (0, 1]");
  G2Curve out = curve;
  for (auto& v : out.g2) v = 1.0 + V * (v - 1.0);
  for (auto& s : out.std_err) s *= V;
  return out;
}

void write_sweep_csv(std::ostream& out, const SweepTable& t) {
  write_csv_header(out, {"n_infty", "gamma_up_GHz", "omega2_GHz", "lambda_real_GHz", "g2_zero"});
  for (const auto& r : t.rows)
    write_csv_row(out, {r.n_infty, r.gamma_up, r.omega2, r.lambda_real, r.g2_zero});
}

}  // namespace pbec::fitting
