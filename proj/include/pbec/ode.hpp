#ifndef PBEC_ODE_HPP
#define PBEC_ODE_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>

#include "pbec/errors.hpp"

namespace pbec::ode {

template <std::size_t N>
using State = std::array<double, N>;

struct Options {
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  double h_init = 0.0;          // 0 = auto
  double h_min_factor = 1e-14;  // h_min = factor * span
  std::size_t max_steps = 50'000'000;
};

namespace detail {

// Dormand-Prince 5(4) coefficients.
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// difference between 5th and embedded 4th order solution
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace detail

/// Adaptive Dormand-Prince 5(4). Calls observer(t, y) at t0 and after every
/// accepted step; guard(y) == false rejects the step (used to keep iterates in
/// a physical box). Throws StiffnessError on step-size underflow.
template <std::size_t N, typename Rhs, typename Observer, typename Guard>
void integrate_rk45(Rhs&& rhs, State<N>& y, double t0, double t1, const Options& opt,
                    Observer&& observer, Guard&& guard) {
  using namespace detail;
  const double span = t1 - t0;
  if (!(span > 0)) throw ValidationError("t_end", "integration span must be positive");
  double t = t0;
  State<N> k1, k2, k3, k4, k5, k6, k7, ytmp, ynew, yerr;
  rhs(t, y, k1);
  observer(t, y);

  double h = opt.h_init;
  if (h <= 0) {
    double ynorm = 0, fnorm = 0;
    for (std::size_t i = 0; i < N; ++i) {
      ynorm = std::max(ynorm, std::abs(y[i]));
      fnorm = std::max(fnorm, std::abs(k1[i]));
    }
    h = (fnorm > 0) ? std::min(0.01 * (ynorm + opt.abs_tol) / fnorm, span / 10) : span / 100;
    h = std::min(std::max(h, span * 1e-10), span);
  }
  const double h_min = span * opt.h_min_factor;

  for (std::size_t step = 0; step < opt.max_steps; ++step) {
    if (t >= t1) return;
    bool last = false;
    if (t + h >= t1) {
      h = t1 - t;
      last = true;
    }

    auto stage = [&](State<N>& out, auto... cw) {
      // out = y + h * sum(c*w)
      for (std::size_t i = 0; i < N; ++i) {
        double acc = 0;
        ((acc += cw.first * cw.second[i]), ...);
        out[i] = y[i] + h * acc;
      }
    };
    using P = std::pair<double, const State<N>&>;
    stage(ytmp, P{a21, k1});
    rhs(t + c2 * h, ytmp, k2);
    stage(ytmp, P{a31, k1}, P{a32, k2});
    rhs(t + c3 * h, ytmp, k3);
    stage(ytmp, P{a41, k1}, P{a42, k2}, P{a43, k3});
    rhs(t + c4 * h, ytmp, k4);
    stage(ytmp, P{a51, k1}, P{a52, k2}, P{a53, k3}, P{a54, k4});
    rhs(t + c5 * h, ytmp, k5);
    stage(ytmp, P{a61, k1}, P{a62, k2}, P{a63, k3}, P{a64, k4}, P{a65, k5});
    rhs(t + h, ytmp, k6);
    stage(ynew, P{b1, k1}, P{b3, k3}, P{b4, k4}, P{b5, k5}, P{b6, k6});
    rhs(t + h, ynew, k7);

    double err = 0;
    for (std::size_t i = 0; i < N; ++i) {
      yerr[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      double sc = opt.abs_tol + opt.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      err = std::max(err, std::abs(yerr[i]) / sc);
    }

    bool finite = true;
    for (std::size_t i = 0; i < N; ++i) finite = finite && std::isfinite(ynew[i]);

    if (finite && err <= 1.0 && guard(ynew)) {
      t = last ? t1 : t + h;
      y = ynew;
      k1 = k7;  // FSAL
      observer(t, y);
      double fac = (err > 0) ? 0.9 * std::pow(err, -0.2) : 5.0;
      h *= std::min(5.0, std::max(0.2, fac));
    } else {
      double fac = (finite && err > 0) ? std::max(0.1, 0.9 * std::pow(err, -0.2)) : 0.1;
      h *= std::min(0.5, fac);
      if (h < h_min)
        throw StiffnessError("rk45: step size underflow at t = " + std::to_string(t) +
                             " (stiff system?)");
    }
  }
  throw ConvergenceError("rk45: max step count exceeded");
}

template <std::size_t N, typename Rhs, typename Observer>
void integrate_rk45(Rhs&& rhs, State<N>& y, double t0, double t1, const Options& opt,
                    Observer&& observer) {
  integrate_rk45<N>(rhs, y, t0, t1, opt, observer, [](const State<N>&) { return true; });
}

/// Semi-implicit (backward Euler, damped Newton per step, step doubling/halving
/// error control). Fallback for stiff parameter regions; jac fills the row-major
/// N x N Jacobian of rhs.
template <std::size_t N, typename Rhs, typename Jac, typename Observer>
void integrate_semi_implicit(Rhs&& rhs, Jac&& jac, State<N>& y, double t0, double t1,
                             const Options& opt, Observer&& observer) {
  double t = t0;
  const double span = t1 - t0;
  double h = (opt.h_init > 0) ? opt.h_init : span / 1000;
  const double h_min = span * opt.h_min_factor;
  observer(t, y);

  auto be_step = [&](const State<N>& y0, double tn, double hh, State<N>& out) -> bool {
    // solve z - y0 - hh f(tn+hh, z) = 0 by Newton
    out = y0;
    State<N> f, r;
    std::array<double, N * N> J;
    for (int it = 0; it < 50; ++it) {
      rhs(tn + hh, out, f);
      double rn = 0, sc = 0;
      for (std::size_t i = 0; i < N; ++i) {
        r[i] = out[i] - y0[i] - hh * f[i];
        rn = std::max(rn, std::abs(r[i]));
        sc = std::max(sc, opt.abs_tol + opt.rel_tol * std::abs(out[i]));
      }
      if (rn < sc) return true;
      jac(tn + hh, out, J);
      // A = I - hh*J, solve A d = -r (Gauss, partial pivot)
      std::array<double, N * N> A;
      std::array<double, N> b;
      for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = 0; j < N; ++j) A[i * N + j] = (i == j ? 1.0 : 0.0) - hh * J[i * N + j];
        b[i] = -r[i];
      }
      for (std::size_t col = 0; col < N; ++col) {
        std::size_t piv = col;
        for (std::size_t i = col + 1; i < N; ++i)
          if (std::abs(A[i * N + col]) > std::abs(A[piv * N + col])) piv = i;
        if (A[piv * N + col] == 0) return false;
        if (piv != col) {
          for (std::size_t j = 0; j < N; ++j) std::swap(A[col * N + j], A[piv * N + j]);
          std::swap(b[col], b[piv]);
        }
        for (std::size_t i = col + 1; i < N; ++i) {
          double f2 = A[i * N + col] / A[col * N + col];
          for (std::size_t j = col; j < N; ++j) A[i * N + j] -= f2 * A[col * N + j];
          b[i] -= f2 * b[col];
        }
      }
      for (std::size_t ii = N; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t j = ii + 1; j < N; ++j) s -= A[ii * N + j] * b[j];
        b[ii] = s / A[ii * N + ii];
      }
      for (std::size_t i = 0; i < N; ++i) out[i] += b[i];
    }
    return false;
  };

  State<N> full, half1, half2;
  while (t < t1) {
    if (t + h > t1) h = t1 - t;
    bool ok = be_step(y, t, h, full) && be_step(y, t, h / 2, half1) &&
              be_step(half1, t + h / 2, h / 2, half2);
    double err = 0;
    if (ok) {
      for (std::size_t i = 0; i < N; ++i) {
        double sc = opt.abs_tol + opt.rel_tol * std::max(std::abs(y[i]), std::abs(half2[i]));
        err = std::max(err, std::abs(full[i] - half2[i]) / sc);
      }
    }
    if (ok && err <= 1.0) {
      // first-order extrapolation of the two half steps
      for (std::size_t i = 0; i < N; ++i) y[i] = 2 * half2[i] - full[i];
      t += h;
      observer(t, y);
      if (err < 0.1) h *= 2;
    } else {
      h /= 2;
      if (h < h_min)
        throw StiffnessError("semi-implicit: step size underflow at t = " + std::to_string(t));
    }
  }
}

}  // namespace pbec::ode

#endif
