#include "pbec/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "pbec/errors.hpp"
#include "pbec/io.hpp"
#include "pbec/ode.hpp"

namespace pbec::meanfield {

std::pair<double, double> mean_field_rhs(const MeanFieldState& s, const ModelParams& p) {
  // long double accumulation: the B terms nearly cancel near the steady state
  long double n = s.n, m = s.m_up;
  long double absorb = (long double)p.B_abs * (p.M - m) * n;
  long double emit = (long double)p.B_em * (n + 1) * m;
  long double dn = -(long double)p.kappa * n - absorb + emit;
  long double dm = (long double)p.gamma_up * (p.M - m) - (long double)p.gamma_down * m + absorb - emit;
  return {(double)dn, (double)dm};
}

std::array<double, 4> mean_field_jacobian(const MeanFieldState& s, const ModelParams& p) {
  double n = s.n, m = s.m_up;
  double dfn_dn = -p.kappa - p.B_abs * (p.M - m) + p.B_em * m;
  double dfn_dm = p.B_abs * n + p.B_em * (n + 1);
  double dfm_dn = p.B_abs * (p.M - m) - p.B_em * m;
  double dfm_dm = -p.gamma_up - p.gamma_down - p.B_abs * n - p.B_em * (n + 1);
  return {dfn_dn, dfn_dm, dfm_dn, dfm_dm};
}

TimeSeries integrate(const ModelParams& p, MeanFieldState initial, double t_end, double rel_tol,
                     double abs_tol) {
  if (!(t_end > 0)) throw ValidationError("t_end", "must be > 0");
  if (!(rel_tol > 0) || !(abs_tol > 0)) throw ValidationError("tol", "tolerances must be > 0");
  if (initial.n < 0 || initial.m_up < 0 || initial.m_up > p.M)
    throw ValidationError("initial", "outside physical box");

  ode::Options opt;
  opt.rel_tol = rel_tol;
  opt.abs_tol = abs_tol;
  auto rhs = [&](double, const ode::State<2>& y, ode::State<2>& dy) {
    auto [dn, dm] = mean_field_rhs({y[0], y[1]}, p);
    dy = {dn, dm};
  };
  auto guard = [&](const ode::State<2>& y) {
    return y[0] >= -abs_tol && y[1] >= -abs_tol && y[1] <= p.M + abs_tol;
  };

  TimeSeries ts;
  auto obs = [&](double t, const ode::State<2>& y) {
    ts.times.push_back(t);
    ts.states.push_back({y[0], y[1]});
  };
  ode::State<2> y{initial.n, initial.m_up};
  try {
    ode::integrate_rk45<2>(rhs, y, 0.0, t_end, opt, obs, guard);
  } catch (const StiffnessError&) {
    // stiff region (large M*B rates): restart with the implicit integrator
    ts.times.clear();
    ts.states.clear();
    auto jac = [&](double, const ode::State<2>& yy, std::array<double, 4>& J) {
      J = mean_field_jacobian({yy[0], yy[1]}, p);
    };
    y = {initial.n, initial.m_up};
    ode::integrate_semi_implicit<2>(rhs, jac, y, 0.0, t_end, opt, obs);
  }
  return ts;
}

MeanFieldState steady_state_closed_form(const ModelParams& p) {
  double denom_n = p.kappa * (p.B_em + p.B_abs);
  double denom_m = p.B_abs + p.B_em;
  if (denom_n == 0 || denom_m == 0)
    throw ValidationError("params", "closed form undefined: kappa (B_em + B_abs) = 0");
  double n = p.M * (p.B_em * p.gamma_up - p.B_abs * p.gamma_down) / denom_n;
  double m = (p.M * p.B_abs + p.kappa) / denom_m;
  return {std::max(n, 0.0), std::min(std::max(m, 0.0), p.M)};
}

static double residual_scale(const ModelParams& p) {
  return std::max({p.kappa, p.gamma_up, 1e-300}) * p.M;
}

MeanFieldState steady_state(const ModelParams& p) {
  if (!(p.kappa > 0 || p.gamma_down > 0))
    throw ValidationError("params", "steady state needs kappa > 0 or gamma_down > 0");

  if (p.gamma_up == 0 && p.B_em == 0) return {0.0, 0.0};

  // warm start from the closed form where defined, else a crude guess
  MeanFieldState s;
  if (p.kappa * (p.B_em + p.B_abs) > 0) {
    s = steady_state_closed_form(p);
  } else {
    s = {0.0, p.M * p.gamma_up / std::max(p.gamma_up + p.gamma_down, 1e-300)};
  }
  s.n = std::max(s.n, 0.0);
  s.m_up = std::clamp(s.m_up, 0.0, p.M);

  const double tol = 1e-10 * residual_scale(p);
  bool left_box = false;
  for (int it = 0; it < 200; ++it) {
    auto [f1, f2] = mean_field_rhs(s, p);
    if (std::max(std::abs(f1), std::abs(f2)) < 1e-3 * tol) break;
    auto J = mean_field_jacobian(s, p);
    double det = J[0] * J[3] - J[1] * J[2];
    if (det == 0) {
      left_box = true;
      break;
    }
    double dn = (-f1 * J[3] + f2 * J[1]) / det;
    double dm = (-f2 * J[0] + f1 * J[2]) / det;
    double lam = 1.0;
    while (lam > 1e-12) {
      MeanFieldState trial{s.n + lam * dn, s.m_up + lam * dm};
      if (trial.n >= 0 && trial.m_up >= 0 && trial.m_up <= p.M) {
        auto [g1, g2] = mean_field_rhs(trial, p);
        if (std::hypot(g1, g2) <= std::hypot(f1, f2) || lam < 0.3) {
          s = trial;
          break;
        }
      }
      lam /= 2;
    }
    if (lam <= 1e-12) {
      left_box = true;
      break;
    }
  }

  auto [r1, r2] = mean_field_rhs(s, p);
  if (left_box || std::max(std::abs(r1), std::abs(r2)) >= tol) {
    // fall back to relaxation by long-time integration, then one Newton polish
    double rate = std::max({p.kappa, p.gamma_up + p.gamma_down, 1e-6});
    MeanFieldState init{0.0, 0.0};
    TimeSeries ts = integrate(p, init, 60.0 / rate, 1e-12, 1e-14);
    s = ts.states.back();
    for (int it = 0; it < 50; ++it) {
      auto [f1, f2] = mean_field_rhs(s, p);
      auto J = mean_field_jacobian(s, p);
      double det = J[0] * J[3] - J[1] * J[2];
      if (det == 0) break;
      s.n += (-f1 * J[3] + f2 * J[1]) / det;
      s.m_up += (-f2 * J[0] + f1 * J[2]) / det;
    }
    auto [g1, g2] = mean_field_rhs(s, p);
    if (std::max(std::abs(g1), std::abs(g2)) >= tol || s.n < 0 || s.m_up < 0 || s.m_up > p.M)
      throw ConvergenceError("steady_state: no physical root within tolerance");
  }
  return s;
}

double pump_for_target_n(const ModelParams& p, double n_target) {
  if (!(n_target > 0)) throw ValidationError("n_target", "must be > 0");

  auto n_of = [&](double gu) {
    ModelParams q = p;
    q.gamma_up = gu;
    return steady_state(q).n;
  };

  // initial guess from inverting the closed form
  double guess;
  if (p.B_em > 0) {
    guess = (n_target * p.kappa * (p.B_em + p.B_abs) / p.M + p.B_abs * p.gamma_down) / p.B_em;
  } else {
    guess = p.kappa * n_target / p.M;
  }
  if (!(guess > 0)) guess = p.kappa * n_target / std::max(p.M, 1.0);

  double lo = guess, hi = guess;
  for (int it = 0; it < 200 && n_of(lo) > n_target; ++it) lo /= 2;
  for (int it = 0; it < 200 && n_of(hi) < n_target; ++it) hi *= 2;
  if (!(n_of(lo) <= n_target && n_of(hi) >= n_target))
    throw ConvergenceError("pump_for_target_n: bracketing failed");

  // bisection with secant acceleration; n(Gamma_up) is monotone increasing
  double gu = 0;
  for (int it = 0; it < 200; ++it) {
    gu = 0.5 * (lo + hi);
    double n = n_of(gu);
    if (std::abs(n - n_target) <= 1e-9 * n_target) return gu;
    (n < n_target ? lo : hi) = gu;
    if ((hi - lo) <= 1e-14 * hi) break;
  }
  if (std::abs(n_of(gu) - n_target) > 1e-8 * n_target)
    throw ConvergenceError("pump_for_target_n: did not reach relative 1e-8");
  return gu;
}

void write_timeseries_csv(std::ostream& out, const TimeSeries& ts) {
  write_csv_header(out, {"t_ns", "n", "m_up"});
  for (std::size_t i = 0; i < ts.times.size(); ++i)
    write_csv_row(out, {ts.times[i], ts.states[i].n, ts.states[i].m_up});
}

}  // namespace pbec::meanfield
