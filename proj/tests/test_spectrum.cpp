#include <doctest.h>

#include <cmath>
#include <numeric>

#include "pbec/constants.hpp"
#include "pbec/errors.hpp"
#include "pbec/spectrum.hpp"

using namespace pbec;

namespace {

spectrum::TrapModel reference_trap() {
  return {300.0, 2.0 * constants::pi * 40.0, 571.3};
}

std::vector<double> linspace(double a, double b, int k) {
  std::vector<double> v((std::size_t)k);
  for (int i = 0; i < k; ++i) v[(std::size_t)i] = a + (b - a) * i / (k - 1.0);
  return v;
}

}  // namespace

TEST_CASE("critical number matches the published 80660 within 1%") {
  double nc = spectrum::critical_number(300.0, 2.0 * constants::pi * 40.0);
  CHECK(nc == doctest::Approx(80344.38383).epsilon(1e-9));  // CODATA-exact evaluation
  CHECK(std::abs(nc - 80660.0) / 80660.0 < 0.01);
}

TEST_CASE("critical number scaling laws") {
  double nc = spectrum::critical_number(300.0, 2.0 * constants::pi * 40.0);
  CHECK(spectrum::critical_number(300.0, 4.0 * constants::pi * 40.0) ==
        doctest::Approx(nc / 4).epsilon(1e-12));
  CHECK(spectrum::critical_number(150.0, 2.0 * constants::pi * 40.0) ==
        doctest::Approx(nc / 4).epsilon(1e-12));
}

TEST_CASE("level occupations: chemical potential inversion at n_condensate = 1") {
  auto trap = reference_trap();
  auto occ = spectrum::level_occupations(trap, 1.0);
  CHECK(occ[0] == doctest::Approx(1.0).epsilon(1e-12));
  // (hbar w_c - mu)/kB T = ln 2; level 5 occupation = 6/(exp(ln2 + 5x) - 1)
  double x = constants::hbar_over_kB_K_ns * trap.Omega / trap.T;
  double expect = 6.0 / std::expm1(std::log(2.0) + 5 * x);
  CHECK(occ[5] == doctest::Approx(expect).epsilon(1e-12));
  CHECK(occ[5] == doctest::Approx(5.6336727396).epsilon(1e-9));
}

TEST_CASE("total excited population saturates at the critical number") {
  // single-polarization ladder: occupations sum to N_c/2 (the published N_c
  // counts both polarizations); the saturated total obeys 2 * sum ~ N_c to 2%
  auto trap = reference_trap();
  auto occ = spectrum::level_occupations(trap, 1e9, 1e-12);
  double excited = std::accumulate(occ.begin() + 1, occ.end(), 0.0);
  double nc = spectrum::critical_number(trap.T, trap.Omega);
  CHECK(std::abs(2.0 * excited - nc) / nc < 0.02);
  CHECK(excited == doctest::Approx(40973.99).epsilon(1e-3));
}

TEST_CASE("level occupations: large-n asymptote (k+1) kB T/(k hbar Omega) at small k") {
  auto trap = reference_trap();
  auto occ = spectrum::level_occupations(trap, 1e12);
  double x = constants::hbar_over_kB_K_ns * trap.Omega / trap.T;
  for (int k : {1, 2, 3}) {
    double asym = (k + 1.0) / (k * x);
    CHECK(occ[(std::size_t)k] == doctest::Approx(asym).epsilon(0.01));
  }
}

TEST_CASE("series truncation is converged") {
  auto trap = reference_trap();
  auto occ1 = spectrum::level_occupations(trap, 1000.0, 1e-9);
  auto occ2 = spectrum::level_occupations(trap, 1000.0, 5e-10);
  double t1 = std::accumulate(occ1.begin(), occ1.end(), 0.0);
  double t2 = std::accumulate(occ2.begin(), occ2.end(), 0.0);
  CHECK(std::abs(t1 - t2) / t2 < 1e-6);
}

TEST_CASE("spectrum_curve: condensate spike at the cutoff wavelength") {
  auto trap = reference_trap();
  double nc = spectrum::critical_number(trap.T, trap.Omega);
  auto grid = linspace(560.0, 575.0, 1501);
  auto curve = spectrum::spectrum_curve(trap, 20 * nc, 0.25, grid);
  std::size_t imax = 0;
  for (std::size_t i = 1; i < curve.intensity.size(); ++i)
    if (curve.intensity[i] > curve.intensity[imax]) imax = i;
  CHECK(curve.wavelength_nm[imax] == doctest::Approx(571.3).epsilon(1e-3));
  CHECK(curve.intensity[imax] == doctest::Approx(1.0));  // unit peak normalization
}

TEST_CASE("spectrum_curve: condensate peak grows monotonically against the tail") {
  auto trap = reference_trap();
  double nc = spectrum::critical_number(trap.T, trap.Omega);
  auto grid = linspace(560.0, 575.0, 1501);
  double prev_ratio = 0;
  for (double f : {0.1, 1.0, 10.0}) {
    auto curve = spectrum::spectrum_curve(trap, f * nc, 0.25, grid);
    // tail sampled away from the cutoff (566 nm), peak at the cutoff
    std::size_t i_tail = 600;  // 566.0 nm
    std::size_t i_peak = 1130; // 571.3 nm
    double ratio = curve.intensity[i_peak] / curve.intensity[i_tail];
    CHECK(ratio > prev_ratio);
    prev_ratio = ratio;
  }
}

TEST_CASE("spectrum_curve is stable under grid refinement") {
  auto trap = reference_trap();
  auto c1 = spectrum::spectrum_curve(trap, 5e4, 0.5, linspace(565.0, 573.0, 801));
  auto c2 = spectrum::spectrum_curve(trap, 5e4, 0.5, linspace(565.0, 573.0, 1601));
  for (std::size_t i = 0; i < c1.wavelength_nm.size(); ++i) {
    CHECK(c1.intensity[i] == doctest::Approx(c2.intensity[2 * i]).epsilon(1e-4));
  }
}

TEST_CASE("spectrum_curve requires the grid to cover the cutoff") {
  auto trap = reference_trap();
  CHECK_THROWS_AS(spectrum::spectrum_curve(trap, 100.0, 0.5, linspace(540.0, 560.0, 101)),
                  ValidationError);
}

TEST_CASE("fit_spectrum round-trips synthetic data within 1%") {
  auto trap = reference_trap();
  auto grid = linspace(561.0, 574.0, 1301);
  for (double n_true : {2e4, 8.066e4, 5e5}) {
    auto data = spectrum::spectrum_curve(trap, n_true, 0.4, grid);
    double n_fit = spectrum::fit_spectrum(data, trap);
    CHECK(std::abs(n_fit - n_true) / n_true < 0.01);
  }
}

TEST_CASE("fit_spectrum: exact recovery when data equals the model at N_c") {
  auto trap = reference_trap();
  double nc = spectrum::critical_number(trap.T, trap.Omega);
  auto grid = linspace(561.0, 574.0, 1301);
  auto data = spectrum::spectrum_curve(trap, nc, 0.4, grid);
  CHECK(spectrum::fit_spectrum(data, trap) == doctest::Approx(nc).epsilon(1e-3));
}

TEST_CASE("fit_spectrum: larger condensate peak in the data gives larger fitted n") {
  auto trap = reference_trap();
  auto grid = linspace(561.0, 574.0, 1301);
  auto small = spectrum::spectrum_curve(trap, 3e4, 0.4, grid);
  auto large = spectrum::spectrum_curve(trap, 3e5, 0.4, grid);
  double n_small = spectrum::fit_spectrum(small, trap);
  double n_large = spectrum::fit_spectrum(large, trap);
  CHECK(n_large > n_small);
}
