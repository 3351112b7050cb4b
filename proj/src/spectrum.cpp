#include "pbec/spectrum.hpp"

#include <algorithm>
#include <cmath>

#include "pbec/errors.hpp"

namespace pbec::spectrum {

namespace {

void check_trap(const TrapModel& t) {
  if (!(t.T > 0)) throw ValidationError("T", "must be > 0");
  if (!(t.Omega > 0)) throw ValidationError("Omega", "must be > 0");
  if (!(t.lambda_c_nm > 0)) throw ValidationError("lambda_c", "must be > 0");
}

}  // namespace

double critical_number(double T_K, double Omega_rad_per_ns) {
  if (!(T_K > 0)) throw ValidationError("T", "must be > 0");
  if (!(Omega_rad_per_ns > 0)) throw ValidationError("Omega", "must be > 0");
  double ratio = T_K / (constants::hbar_over_kB_K_ns * Omega_rad_per_ns);
  return constants::pi * constants::pi / 3.0 * ratio * ratio;
}

std::vector<double> level_occupations(const TrapModel& trap, double n_condensate,
                                      double term_cutoff) {
  check_trap(trap);
  if (!(n_condensate > 0)) throw ValidationError("n_condensate", "must be > 0");
  // beta (hbar omega_c - mu) from the condensate occupation
  double e0 = std::log1p(1.0 / n_condensate);
  double x = constants::hbar_over_kB_K_ns * trap.Omega / trap.T;  // beta hbar Omega

  std::vector<double> occ;
  occ.push_back(n_condensate);
  double total = n_condensate;
  for (int k = 1;; ++k) {
    double term = (k + 1.0) / std::expm1(e0 + k * x);
    occ.push_back(term);
    total += term;
    if (term < term_cutoff * total && k > 8) break;
    if (k > 50'000'000) throw ConvergenceError("level_occupations: series did not truncate");
  }
  return occ;
}

SpectrumCurve spectrum_curve(const TrapModel& trap, double n_condensate,
                             double resolution_fwhm_nm, const std::vector<double>& grid_nm) {
  check_trap(trap);
  if (grid_nm.size() < 2) throw ValidationError("grid", "need at least 2 wavelengths");
  double gmin = *std::min_element(grid_nm.begin(), grid_nm.end());
  double gmax = *std::max_element(grid_nm.begin(), grid_nm.end());
  if (!(gmin <= trap.lambda_c_nm && trap.lambda_c_nm <= gmax))
    throw ValidationError("grid", "must cover the cutoff wavelength");

  auto occ = level_occupations(trap, n_condensate);
  const double wc = trap.omega_c();
  const double sigma = (resolution_fwhm_nm > 0)
                           ? resolution_fwhm_nm / 2.3548200450309493  // FWHM -> sigma
                           : 0.0;

  SpectrumCurve out;
  out.wavelength_nm = grid_nm;
  out.resolution_fwhm_nm = resolution_fwhm_nm;
  out.intensity.assign(grid_nm.size(), 0.0);

  const double support = (sigma > 0) ? 5.0 * sigma : 0.0;
  for (std::size_t k = 0; k < occ.size(); ++k) {
    double lam_k = 2.0 * constants::pi * constants::c_nm_per_ns / (wc + (double)k * trap.Omega);
    if (lam_k < gmin - support) break;  // lines move to shorter wavelength with k
    if (sigma > 0) {
      for (std::size_t i = 0; i < grid_nm.size(); ++i) {
        double d = (grid_nm[i] - lam_k) / sigma;
        if (std::abs(d) < 8.0) out.intensity[i] += occ[k] * std::exp(-0.5 * d * d);
      }
    } else {
      // zero resolution: deposit on the nearest grid point
      std::size_t best = 0;
      double bd = std::abs(grid_nm[0] - lam_k);
      for (std::size_t i = 1; i < grid_nm.size(); ++i) {
        double d = std::abs(grid_nm[i] - lam_k);
        if (d < bd) {
          bd = d;
          best = i;
        }
      }
      out.intensity[best] += occ[k];
    }
  }
  double peak = *std::max_element(out.intensity.begin(), out.intensity.end());
  if (peak > 0)
    for (auto& v : out.intensity) v /= peak;
  return out;
}

namespace {

double ssr_for(const SpectrumCurve& data, const TrapModel& trap, double n_cond) {
  SpectrumCurve model =
      spectrum_curve(trap, n_cond, data.resolution_fwhm_nm, data.wavelength_nm);
  // optimal scale A = sum(I m)/sum(m^2) absorbs the arbitrary-units factor
  double num = 0, den = 0;
  for (std::size_t i = 0; i < model.intensity.size(); ++i) {
    num += data.intensity[i] * model.intensity[i];
    den += model.intensity[i] * model.intensity[i];
  }
  double A = (den > 0) ? num / den : 0.0;
  double ssr = 0;
  for (std::size_t i = 0; i < model.intensity.size(); ++i) {
    double r = data.intensity[i] - A * model.intensity[i];
    ssr += r * r;
  }
  return ssr;
}

}  // namespace

double fit_spectrum(const SpectrumCurve& data, const TrapModel& trap) {
  check_trap(trap);
  if (data.wavelength_nm.size() < 8) throw ValidationError("data", "too few points");
  double gmin = *std::min_element(data.wavelength_nm.begin(), data.wavelength_nm.end());
  double gmax = *std::max_element(data.wavelength_nm.begin(), data.wavelength_nm.end());
  if (!(gmin <= trap.lambda_c_nm && trap.lambda_c_nm <= gmax))
    throw ValidationError("data", "must include the cutoff region");

  // coarse log scan, then golden-section refinement
  double best_n = 1.0, best_ssr = 1e300;
  for (int i = 0; i <= 60; ++i) {
    double n = std::pow(10.0, -1.0 + 8.0 * i / 60.0);
    double s = ssr_for(data, trap, n);
    if (s < best_ssr) {
      best_ssr = s;
      best_n = n;
    }
  }
  double lo = std::log(best_n) - 0.5, hi = std::log(best_n) + 0.5;
  const double gr = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = ssr_for(data, trap, std::exp(x1)), f2 = ssr_for(data, trap, std::exp(x2));
  for (int it = 0; it < 200 && (b - a) > 1e-10; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = ssr_for(data, trap, std::exp(x1));
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = ssr_for(data, trap, std::exp(x2));
    }
  }
  return std::exp(0.5 * (a + b));
}

}  // namespace pbec::spectrum
