#ifndef PBEC_CONSTANTS_HPP
#define PBEC_CONSTANTS_HPP

namespace pbec::constants {

// CODATA / SI-2019 exact values.
inline constexpr double hbar_J_s = 1.054571817e-34;
inline constexpr double kB_J_per_K = 1.380649e-23;

// Unit convention: time in ns, rates in GHz, so rate*time is dimensionless
// (GHz*ns == 1). Angular frequencies in rad/ns.
inline constexpr double hbar_over_kB_K_ns = hbar_J_s / kB_J_per_K * 1e9;  // ~7.63823e-3
inline constexpr double c_nm_per_ns = 2.99792458e8;
inline constexpr double pi = 3.14159265358979323846;

}  // namespace pbec::constants

#endif
