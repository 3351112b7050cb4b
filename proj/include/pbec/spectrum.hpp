#ifndef PBEC_SPECTRUM_HPP
#define PBEC_SPECTRUM_HPP

#include <vector>

#include "pbec/constants.hpp"

namespace pbec::spectrum {

/// Harmonically trapped 2D photon gas: cutoff at lambda_c, level spacing Omega.
struct TrapModel {
  double T;            // K
  double Omega;        // trap frequency, rad/ns
  double lambda_c_nm;  // cutoff wavelength
  double omega_c() const { return 2.0 * constants::pi * constants::c_nm_per_ns / lambda_c_nm; }
};

/// Critical photon number pi^2/3 (kB T / hbar Omega)^2 of the thermal cloud.
/// Includes the standard two-fold polarization degeneracy of the formula.
double critical_number(double T_K, double Omega_rad_per_ns);

/// Bose-Einstein occupations per oscillator level k = 0, 1, ... with level
/// energies hbar omega_c + k hbar Omega and single-polarization degeneracy
/// (k+1). The chemical potential is fixed by the condensate occupation
/// n_condensate = 1/(exp((hbar omega_c - mu)/kB T) - 1). The series stops when
/// terms fall below term_cutoff of the running total.
std::vector<double> level_occupations(const TrapModel& trap, double n_condensate,
                                      double term_cutoff = 1e-9);

struct SpectrumCurve {
  std::vector<double> wavelength_nm;
  std::vector<double> intensity;  // arbitrary units
  double resolution_fwhm_nm = 0;
};

/// Level occupations mapped to wavelengths 2 pi c/(omega_c + k Omega), each
/// line convolved with a Gaussian of the given FWHM, normalized to unit peak.
SpectrumCurve spectrum_curve(const TrapModel& trap, double n_condensate,
                             double resolution_fwhm_nm, const std::vector<double>& grid_nm);

/// One-parameter fit of the condensate occupation to measured spectrum data
/// (overall intensity scale is a nuisance parameter).
double fit_spectrum(const SpectrumCurve& data, const TrapModel& trap);

}  // namespace pbec::spectrum

#endif
