#include "pbec/model.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "pbec/constants.hpp"
#include "pbec/errors.hpp"
#include "pbec/io.hpp"

namespace pbec {

double kennard_stepanov(double B_em, double delta, double T) {
  if (!(B_em > 0)) throw ValidationError("B_em", "must be > 0");
  if (!(T > 0)) throw ValidationError("T", "must be > 0");
  return B_em * std::exp(constants::hbar_over_kB_K_ns * delta / T);
}

double detuning_for_ratio(double ratio, double T) {
  if (!(ratio > 0)) throw ValidationError("ratio", "must be > 0");
  if (!(T > 0)) throw ValidationError("T", "must be > 0");
  return -std::log(ratio) * T / constants::hbar_over_kB_K_ns;
}

ModelParams validate(ModelParams p) {
  if (!(p.M >= 1)) throw ValidationError("M", "must be >= 1");
  if (!(p.kappa >= 0)) throw ValidationError("kappa", "must be >= 0");
  if (!(p.gamma_up >= 0)) throw ValidationError("gamma_up", "must be >= 0");
  if (!(p.gamma_down >= 0)) throw ValidationError("gamma_down", "must be >= 0");
  if (!(p.B_em >= 0)) throw ValidationError("B_em", "must be >= 0");
  if (!(p.B_abs >= 0)) throw ValidationError("B_abs", "must be >= 0");
  if (p.T && !(*p.T > 0)) throw ValidationError("T", "must be > 0");
  if (p.delta && p.T && p.B_em > 0 && p.B_abs > 0) {
    double expect = kennard_stepanov(p.B_em, *p.delta, *p.T);
    if (std::abs(expect - p.B_abs) > 1e-9 * std::abs(expect))
      throw ValidationError("B_abs", "inconsistent with Kennard-Stepanov ratio for (delta, T)");
  }
  if (p.delta && *p.delta < 0 && p.B_abs > 0 && !(p.B_em > p.B_abs))
    throw ValidationError("B_em", "red detuning (delta < 0) requires B_em > B_abs");
  return p;
}

ModelParams resolve_b_abs(ModelParams p, std::string* warning) {
  if (p.delta && p.T && p.B_em > 0) {
    double implied = kennard_stepanov(p.B_em, *p.delta, *p.T);
    if (p.B_abs <= 0) {
      p.B_abs = implied;
    } else if (std::abs(implied - p.B_abs) > 1e-9 * implied) {
      if (warning)
        *warning = "explicit B_abs = " + format_g17(p.B_abs) +
                   " overrides Kennard-Stepanov value " + format_g17(implied);
      p.delta.reset();  // keep the explicit rate, drop the inconsistent detuning
    }
  }
  return p;
}

ModelParams parse_params(std::istream& in) {
  ModelParams p;
  std::map<std::string, double> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r\n") != std::string::npos)
        throw IoError("params line " + std::to_string(lineno) + ": expected `key = value`");
      continue;
    }
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r\n");
      auto e = s.find_last_not_of(" \t\r\n");
      return (b == std::string::npos) ? std::string() : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    try {
      std::size_t pos = 0;
      double x = std::stod(val, &pos);
      if (pos != val.size()) throw std::invalid_argument(val);
      kv[key] = x;
    } catch (const std::exception&) {
      throw IoError("params line " + std::to_string(lineno) + ": bad number `" + val + "`");
    }
  }
  for (const auto& [key, x] : kv) {
    if (key == "M") p.M = x;
    else if (key == "kappa_GHz") p.kappa = x;
    else if (key == "gamma_up_GHz") p.gamma_up = x;
    else if (key == "gamma_down_GHz") p.gamma_down = x;
    else if (key == "B_em_GHz") p.B_em = x;
    else if (key == "B_abs_GHz") p.B_abs = x;
    else if (key == "delta_rad_per_ns") p.delta = x;
    else if (key == "T_K") p.T = x;
    else throw IoError("unknown params key `" + key + "`");
  }
  return p;
}

ModelParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open params file " + path);
  return parse_params(in);
}

void write_params(std::ostream& out, const ModelParams& p) {
  out << "M = " << format_g17(p.M) << "\n"
      << "kappa_GHz = " << format_g17(p.kappa) << "\n"
      << "gamma_up_GHz = " << format_g17(p.gamma_up) << "\n"
      << "gamma_down_GHz = " << format_g17(p.gamma_down) << "\n"
      << "B_em_GHz = " << format_g17(p.B_em) << "\n"
      << "B_abs_GHz = " << format_g17(p.B_abs) << "\n";
  if (p.delta) out << "delta_rad_per_ns = " << format_g17(*p.delta) << "\n";
  if (p.T) out << "T_K = " << format_g17(*p.T) << "\n";
}

}  // namespace pbec
