#include <doctest.h>

#include <cmath>
#include <sstream>

#include "pbec/errors.hpp"
#include "pbec/meanfield.hpp"

using namespace pbec;
using meanfield::MeanFieldState;

namespace {

ModelParams reference_params(double gamma_up = 0) {
  ModelParams p;
  p.M = 5.17e9;
  p.kappa = 2.33;
  p.B_em = 2.50e-5;
  p.B_abs = p.B_em / 57.0;
  p.gamma_up = gamma_up;
  return p;
}

// independent oracle: reduce the steady-state system to one equation in n
// using Gamma_up (M - m) - Gamma_down m - kappa n = 0, then bisect
double steady_n_by_bisection(const ModelParams& p) {
  auto f = [&](double n) {
    double m = (p.gamma_up * p.M - p.kappa * n) / (p.gamma_up + p.gamma_down);
    return -p.kappa * n - p.B_abs * (p.M - m) * n + p.B_em * (n + 1) * m;
  };
  double lo = 0, hi = p.gamma_up * p.M / p.kappa;
  REQUIRE(f(lo) >= 0);
  REQUIRE(f(hi) <= 0);
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    (f(mid) > 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("rhs vanishes with all rates zero, and reduces to the pump term") {
  ModelParams p;
  p.M = 50;
  auto [dn0, dm0] = meanfield::mean_field_rhs({3.0, 7.0}, p);
  CHECK(dn0 == 0.0);
  CHECK(dm0 == 0.0);

  p.gamma_up = 0.25;
  auto [dn1, dm1] = meanfield::mean_field_rhs({0.0, 0.0}, p);
  CHECK(dn1 == 0.0);
  CHECK(dm1 == doctest::Approx(0.25 * 50).epsilon(1e-15));
}

TEST_CASE("rhs at the steady state is tiny (independent bisection root)") {
  ModelParams p = reference_params(2.118e-6);
  double n = steady_n_by_bisection(p);
  double m = (p.gamma_up * p.M - p.kappa * n) / p.gamma_up;
  auto [dn, dm] = meanfield::mean_field_rhs({n, m}, p);
  CHECK(std::abs(dn) < 1e-6 * p.kappa * n);
  CHECK(std::abs(dm) < 1e-6 * p.kappa * n);
}

TEST_CASE("integrate: zero rates give a constant series") {
  ModelParams p;
  p.M = 10;
  p.kappa = 0;
  auto ts = meanfield::integrate(p, {4.0, 6.0}, 5.0);
  for (const auto& s : ts.states) {
    CHECK(s.n == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(s.m_up == doctest::Approx(6.0).epsilon(1e-12));
  }
}

TEST_CASE("integrate: pure cavity loss decays analytically") {
  ModelParams p;
  p.M = 1;
  p.kappa = 0.8;
  double n0 = 123.0;
  auto ts = meanfield::integrate(p, {n0, 0.0}, 6.0, 1e-10, 1e-13);
  for (std::size_t i = 0; i < ts.times.size(); ++i) {
    double expect = n0 * std::exp(-p.kappa * ts.times[i]);
    CHECK(ts.states[i].n == doctest::Approx(expect).epsilon(1e-8));
  }
  CHECK(ts.times.back() == 6.0);
}

TEST_CASE("integrate: long-time limit equals steady_state") {
  ModelParams p = reference_params(2.118e-6);
  auto ss = meanfield::steady_state(p);
  auto ts = meanfield::integrate(p, {0.0, 0.0}, 120.0, 1e-10, 1e-12);
  CHECK(ts.states.back().n == doctest::Approx(ss.n).epsilon(1e-6));
  CHECK(ts.states.back().m_up == doctest::Approx(ss.m_up).epsilon(1e-6));
}

TEST_CASE("integrate: step-halving convergence of the terminal state") {
  ModelParams p = reference_params(4.5859e-6);
  auto coarse = meanfield::integrate(p, {100.0, 1e7}, 3.0, 1e-7, 1e-9);
  auto fine = meanfield::integrate(p, {100.0, 1e7}, 3.0, 1e-11, 1e-13);
  CHECK(coarse.states.back().n ==
        doctest::Approx(fine.states.back().n).epsilon(10 * 1e-7));
}

TEST_CASE("integrate: positivity preserved from a boundary start") {
  ModelParams p = reference_params(1e-6);
  double abs_tol = 1e-12;
  auto ts = meanfield::integrate(p, {0.0, 0.0}, 50.0, 1e-9, abs_tol);
  for (const auto& s : ts.states) {
    CHECK(s.n >= -abs_tol);
    CHECK(s.m_up >= -abs_tol);
    CHECK(s.m_up <= p.M + abs_tol);
  }
}

TEST_CASE("integrate rejects bad tolerances and spans") {
  ModelParams p = reference_params(1e-6);
  CHECK_THROWS_AS(meanfield::integrate(p, {0, 0}, -1.0), ValidationError);
  CHECK_THROWS_AS(meanfield::integrate(p, {0, 0}, 1.0, 0.0, 1e-12), ValidationError);
}

TEST_CASE("steady_state: no pump, nonradiative decay only -> empty cavity") {
  ModelParams p;
  p.M = 100;
  p.kappa = 1.0;
  p.gamma_down = 0.5;
  p.B_em = 0.03;
  p.B_abs = 0.006;
  auto ss = meanfield::steady_state(p);
  CHECK(ss.n == doctest::Approx(0.0).scale(1).epsilon(1e-12));
  CHECK(ss.m_up == doctest::Approx(0.0).scale(1).epsilon(1e-12));
}

TEST_CASE("steady_state matches high-precision reference roots") {
  // reference values from a 50-digit bisection of the reduced 1-D equation
  struct Row {
    double gamma_up, n, m;
  };
  const Row rows[] = {
      {2.118e-6, 4618.50303587, 89210541.271},
      {4.5859e-6, 9999.97662474, 89220755.8707},
      {7.84e-6, 17095.828645, 89224395.048},
  };
  for (const auto& r : rows) {
    ModelParams p = reference_params(r.gamma_up);
    auto ss = meanfield::steady_state(p);
    CHECK(ss.n == doctest::Approx(r.n).epsilon(1e-8));
    CHECK(ss.m_up == doctest::Approx(r.m).epsilon(1e-8));
    // documented residual bound
    auto [dn, dm] = meanfield::mean_field_rhs(ss, p);
    double bound = 1e-10 * std::max(p.kappa, p.gamma_up) * p.M;
    CHECK(std::abs(dn) < bound);
    CHECK(std::abs(dm) < bound);
  }
}

TEST_CASE("steady_state agrees with bisection oracle across the pump range") {
  for (double gu : {1e-6, 3e-6, 1e-5}) {
    ModelParams p = reference_params(gu);
    auto ss = meanfield::steady_state(p);
    CHECK(ss.n == doctest::Approx(steady_n_by_bisection(p)).epsilon(1e-10));
  }
}

TEST_CASE("steady_state requires a dissipation channel") {
  ModelParams p;
  p.M = 10;
  p.gamma_up = 1.0;
  CHECK_THROWS_AS(meanfield::steady_state(p), ValidationError);
}

TEST_CASE("closed form: B_abs = gamma_down = 0 gives n = M gamma_up / kappa") {
  ModelParams p;
  p.M = 1e6;
  p.kappa = 2.0;
  p.B_em = 1e-4;
  p.gamma_up = 3e-4;
  auto cf = meanfield::steady_state_closed_form(p);
  CHECK(cf.n == doctest::Approx(p.M * p.gamma_up / p.kappa).epsilon(1e-14));
}

TEST_CASE("closed form matches the numeric root at experiment scale") {
  ModelParams p = reference_params(7.84e-6);
  auto cf = meanfield::steady_state_closed_form(p);
  auto ss = meanfield::steady_state(p);
  CHECK(cf.n == doctest::Approx(1.71e4).epsilon(0.01));
  CHECK(cf.n == doctest::Approx(ss.n).epsilon(1e-3));
  CHECK(cf.m_up == doctest::Approx(ss.m_up).epsilon(1e-3));
  // m closed form evaluates (M B_abs + kappa)/(B_abs + B_em)
  double expect_m = (p.M * p.B_abs + p.kappa) / (p.B_abs + p.B_em);
  CHECK(cf.m_up == doctest::Approx(expect_m).epsilon(1e-14));
}

TEST_CASE("closed forms converge to the numeric root as M grows") {
  // relative error <= c/M + 1e-6 with a fixed constant
  const double c = 5e6;
  for (double M : {1e4, 1e6, 1e9}) {
    ModelParams p;
    p.M = M;
    p.kappa = 1.0;
    p.B_em = 2.5e4 / M;  // keep M B_em fixed
    p.B_abs = p.B_em / 57.0;
    p.gamma_up = 2e-4;
    auto cf = meanfield::steady_state_closed_form(p);
    auto ss = meanfield::steady_state(p);
    double bound = c / M + 1e-6;
    CHECK(std::abs(cf.n - ss.n) / ss.n < bound);
    CHECK(std::abs(cf.m_up - ss.m_up) / ss.m_up < bound);
  }
}

TEST_CASE("pump_for_target_n: exact inversion in the linear limit") {
  ModelParams p;
  p.M = 1e6;
  p.kappa = 2.0;
  p.B_em = 1e-4;
  p.gamma_up = 0;
  // B_abs = gamma_down = 0: Gamma_up = kappa n / M up to the O(1/M) correction
  double gu = meanfield::pump_for_target_n(p, 500.0);
  CHECK(gu == doctest::Approx(p.kappa * 500.0 / p.M).epsilon(1e-3));
  ModelParams q = p;
  q.gamma_up = gu;
  CHECK(meanfield::steady_state(q).n == doctest::Approx(500.0).epsilon(1e-8));
}

TEST_CASE("pump_for_target_n reproduces the reference pump at n = 4620") {
  ModelParams p = reference_params();
  double gu = meanfield::pump_for_target_n(p, 4620.0);
  CHECK(gu == doctest::Approx(2.118686496e-6).epsilon(1e-6));
  CHECK(gu == doctest::Approx(2.12e-6).epsilon(5e-3));
}

TEST_CASE("pump_for_target_n round trips over three decades") {
  ModelParams p = reference_params();
  for (double target : {1e2, 1e4, 1e6}) {
    double gu = meanfield::pump_for_target_n(p, target);
    ModelParams q = p;
    q.gamma_up = gu;
    CHECK(meanfield::steady_state(q).n == doctest::Approx(target).epsilon(1e-8));
  }
}

TEST_CASE("steady photon number is strictly increasing in the pump") {
  ModelParams p = reference_params();
  double prev = -1;
  for (double gu = 5e-7; gu < 2e-5; gu *= 1.7) {
    ModelParams q = p;
    q.gamma_up = gu;
    double n = meanfield::steady_state(q).n;
    CHECK(n > prev);
    prev = n;
  }
}

TEST_CASE("timeseries CSV has the documented header") {
  ModelParams p;
  p.M = 1;
  p.kappa = 1.0;
  auto ts = meanfield::integrate(p, {1.0, 0.0}, 1.0);
  std::ostringstream out;
  meanfield::write_timeseries_csv(out, ts);
  CHECK(out.str().substr(0, 11) == "t_ns,n,m_up");
}
