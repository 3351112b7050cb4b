#ifndef PBEC_MODEL_HPP
#define PBEC_MODEL_HPP

#include <iosfwd>
#include <optional>
#include <string>

namespace pbec {

/// Rate-equation parameter set for the driven-dissipative condensate coupled
/// to M dye molecules. Rates in GHz, detuning in rad/ns, temperature in K.
struct ModelParams {
  double M = 1;            // molecule count (>= 1)
  double kappa = 0;        // cavity loss
  double gamma_up = 0;     // pump
  double gamma_down = 0;   // nonradiative decay
  double B_em = 0;         // phonon-assisted emission
  double B_abs = 0;        // phonon-assisted absorption
  std::optional<double> delta;  // cavity detuning Delta = omega_c - delta_mol (< 0)
  std::optional<double> T;      // phonon temperature
};

/// Kennard-Stepanov relation B_em/B_abs = exp(-hbar*Delta/kB*T): returns the
/// absorption rate B_em * exp(hbar*delta/kB/T). For delta < 0 the result is < B_em.
double kennard_stepanov(double B_em, double delta, double T);

/// Detuning that reproduces a given B_em/B_abs ratio at temperature T.
double detuning_for_ratio(double ratio, double T);

/// Returns params unchanged if all invariants hold, otherwise throws a
/// ValidationError naming the first violated field.
ModelParams validate(ModelParams p);

/// Fill B_abs from (delta, T) when it was not given explicitly. If both are
/// given and disagree, the explicit B_abs wins and *warning is set.
ModelParams resolve_b_abs(ModelParams p, std::string* warning = nullptr);

/// Plain-text config, one `key = value` per line, '#' comments. Keys:
/// M, kappa_GHz, gamma_up_GHz, gamma_down_GHz, B_em_GHz, B_abs_GHz,
/// delta_rad_per_ns, T_K.
ModelParams parse_params(std::istream& in);
ModelParams load_params(const std::string& path);
void write_params(std::ostream& out, const ModelParams& p);

}  // namespace pbec

#endif
