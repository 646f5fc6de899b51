#pragma once
// Physical parameters of the two-atom + single-mode cavity model, presets,
// and the structured (JSON) configuration format.

#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "cavmol/errors.hpp"
#include "cavmol/units.hpp"

namespace cavmol {

/// All constants of the one-excitation Hamiltonian plus loss and mass.
/// Frequencies are angular [rad/s]; C3 in [rad/s a0^3]; mu in [kg].
struct SystemParams {
  double omega_A = 0.0;
  double omega_B = 0.0;
  double omega_c = 0.0;
  double kappa_A = 0.0;
  double kappa_B = 0.0;
  double C3 = 0.0;
  double mu = 0.0;
  double gamma_c = 0.0;
  int l = 0;

  double detuning_B() const { return omega_B - omega_A; }
  double detuning_c() const { return omega_c - omega_A; }

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(name, "must be > 0");
    };
    auto non_negative = [](double v, const char* name) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError(name, "must be >= 0");
    };
    positive(omega_A, "omega_A");
    positive(omega_B, "omega_B");
    positive(omega_c, "omega_c");
    non_negative(kappa_A, "kappa_A");
    non_negative(kappa_B, "kappa_B");
    non_negative(C3, "C3");
    non_negative(mu, "mu");
    non_negative(gamma_c, "gamma_c");
    if (l < 0) throw ValidationError("l", "must be >= 0");
    // Near-degenerate atoms are assumed throughout.
    if (std::abs(omega_A - omega_B) > 1.0e-3 * omega_A)
      throw ValidationError("omega_B", "must satisfy |omega_A - omega_B| << omega_A");
  }

  bool operator==(const SystemParams&) const = default;
};

/// hbar / (2 mu a0^2) in rad/s: converts a0^-2 to internal energy.
inline double kinetic_constant(const SystemParams& p) {
  if (!(p.mu > 0.0)) throw DomainError("kinetic_constant: mu must be > 0");
  return units::hbar / (2.0 * p.mu * units::bohr_radius * units::bohr_radius);
}

/// Radial grid request. With n_points set the grid is uniform; otherwise the
/// step starts at wall_step and doubles with every doubling of R up to max_step.
struct GridSpec {
  double r_wall = 200.0;
  double r_infinity = 20000.0;
  double wall_step = 0.00625;
  double max_step = 0.8;
  std::optional<int> n_points;

  bool operator==(const GridSpec&) const = default;
};

struct Config {
  std::string preset;  // empty when built from explicit values
  SystemParams params;
  GridSpec grid;
  /// Target pseudocrossing position used to calibrate the shipped C3 [a0].
  double rc_target = 0.0;

  bool operator==(const Config&) const = default;
};

namespace presets {

// C3 values are frozen outputs of calibrate_C3 for each preset's rc_target.
inline constexpr double cs_optical_C3 = 6.0005696835142052e18;
inline constexpr double cs_rydberg_C3 = 1.1745126982133674e17;

/// Cs 6S1/2-6P3/2 pair in an optical high-Q cavity.
inline Config cs_optical() {
  Config c;
  c.preset = "cs-optical";
  auto& p = c.params;
  // 3.5172e14 s^-1 is the ordinary frequency of the Cs D2 line (852 nm).
  p.omega_A = units::two_pi * 3.5172e14;
  p.omega_B = p.omega_A;
  p.omega_c = p.omega_A + units::from_mhz(1.0);
  p.kappa_A = units::from_mhz(120.0);
  p.kappa_B = 0.8 * p.kappa_A;
  p.C3 = cs_optical_C3;
  p.mu = units::cs133_mass / 2.0;
  p.gamma_c = units::from_mhz(40.0);
  c.grid = GridSpec{};
  c.rc_target = 2000.0;
  return c;
}

/// Cold Cs Rydberg pair near a 600 GHz transition in a microwave cavity.
inline Config cs_rydberg() {
  Config c;
  c.preset = "cs-rydberg";
  auto& p = c.params;
  p.omega_A = units::from_ghz(600.0);
  p.omega_B = p.omega_A;
  p.omega_c = p.omega_A + units::from_khz(1.0);
  p.kappa_A = units::from_khz(150.0);
  p.kappa_B = 0.99 * p.kappa_A;
  p.C3 = cs_rydberg_C3;
  p.mu = units::cs133_mass / 2.0;
  p.gamma_c = units::from_khz(2.0);
  c.grid.r_wall = 200.0;
  c.grid.r_infinity = 50000.0;
  c.grid.wall_step = 0.05;
  c.grid.max_step = 1.6;
  c.rc_target = 5000.0;
  return c;
}

inline Config by_name(std::string_view name) {
  if (name == "cs-optical") return cs_optical();
  if (name == "cs-rydberg") return cs_rydberg();
  throw ValidationError("preset", "unknown preset '" + std::string(name) + "'");
}

}  // namespace presets

// ---------------------------------------------------------------------------
// JSON configuration. Frequencies may be given as `<name>_MHz` (ordinary
// frequency, multiplied by 2 pi) or `<name>_rad_s`; serialization always
// writes `_rad_s` keys so a round trip is exact.

namespace detail {

inline std::optional<double> read_frequency(const nlohmann::json& j, const std::string& name) {
  if (j.contains(name + "_rad_s")) return j.at(name + "_rad_s").get<double>();
  if (j.contains(name + "_MHz")) return units::from_mhz(j.at(name + "_MHz").get<double>());
  if (j.contains(name + "_kHz")) return units::from_khz(j.at(name + "_kHz").get<double>());
  return std::nullopt;
}

}  // namespace detail

inline nlohmann::json to_json(const Config& c) {
  nlohmann::json j;
  if (!c.preset.empty()) j["preset"] = c.preset;
  const auto& p = c.params;
  j["params"] = {
      {"omega_A_rad_s", p.omega_A}, {"omega_B_rad_s", p.omega_B},
      {"omega_c_rad_s", p.omega_c}, {"kappa_A_rad_s", p.kappa_A},
      {"kappa_B_rad_s", p.kappa_B}, {"C3_rad_s_a0_3", p.C3},
      {"mu_kg", p.mu},              {"gamma_c_rad_s", p.gamma_c},
      {"l", p.l}};
  j["grid"] = {{"r_wall_a0", c.grid.r_wall},
               {"r_infinity_a0", c.grid.r_infinity},
               {"wall_step_a0", c.grid.wall_step},
               {"max_step_a0", c.grid.max_step}};
  if (c.grid.n_points) j["grid"]["n_points"] = *c.grid.n_points;
  if (c.rc_target > 0.0) j["rc_target_a0"] = c.rc_target;
  return j;
}

/// Builds a validated Config. A "preset" key supplies defaults; any explicit
/// key in "params"/"grid" overrides it.
inline Config load_config(const nlohmann::json& j) {
  Config c;
  bool from_preset = false;
  if (j.contains("preset")) {
    c = presets::by_name(j.at("preset").get<std::string>());
    from_preset = true;
  }
  const nlohmann::json params = j.value("params", nlohmann::json::object());
  auto& p = c.params;
  auto freq = [&](const std::string& name, double& field) {
    if (auto v = detail::read_frequency(params, name)) {
      field = *v;
    } else if (!from_preset) {
      throw ValidationError(name, "missing");
    }
  };
  if (params.contains("omega_A_rad_s")) {
    p.omega_A = params.at("omega_A_rad_s").get<double>();
  } else if (!from_preset) {
    throw ValidationError("omega_A", "missing");
  }
  // Detunings relative to omega_A are accepted for B and the cavity.
  if (params.contains("omega_B_rad_s")) {
    p.omega_B = params.at("omega_B_rad_s").get<double>();
  } else if (auto d = detail::read_frequency(params, "detuning_B")) {
    p.omega_B = p.omega_A + *d;
  } else if (!from_preset) {
    p.omega_B = p.omega_A;
  }
  if (params.contains("omega_c_rad_s")) {
    p.omega_c = params.at("omega_c_rad_s").get<double>();
  } else if (auto d = detail::read_frequency(params, "detuning_c")) {
    p.omega_c = p.omega_A + *d;
  } else if (!from_preset) {
    throw ValidationError("omega_c", "missing (give omega_c_rad_s or detuning_c_MHz)");
  }
  freq("kappa_A", p.kappa_A);
  freq("kappa_B", p.kappa_B);
  freq("gamma_c", p.gamma_c);
  if (params.contains("C3_rad_s_a0_3")) {
    p.C3 = params.at("C3_rad_s_a0_3").get<double>();
  } else if (!from_preset) {
    throw ValidationError("C3", "missing");
  }
  if (params.contains("mu_kg")) {
    p.mu = params.at("mu_kg").get<double>();
  } else if (params.contains("mu_u")) {
    p.mu = params.at("mu_u").get<double>() * units::atomic_mass_unit;
  } else if (!from_preset) {
    throw ValidationError("mu", "missing");
  }
  if (params.contains("l")) p.l = params.at("l").get<int>();

  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    c.grid.r_wall = g.value("r_wall_a0", c.grid.r_wall);
    c.grid.r_infinity = g.value("r_infinity_a0", c.grid.r_infinity);
    c.grid.wall_step = g.value("wall_step_a0", c.grid.wall_step);
    c.grid.max_step = g.value("max_step_a0", c.grid.max_step);
    if (g.contains("n_points")) c.grid.n_points = g.at("n_points").get<int>();
  }
  c.rc_target = j.value("rc_target_a0", c.rc_target);
  p.validate();
  if (!(c.grid.r_wall > 0.0)) throw ValidationError("r_wall", "must be > 0");
  if (!(c.grid.r_infinity > c.grid.r_wall))
    throw ValidationError("r_infinity", "must exceed r_wall");
  if (c.grid.n_points && *c.grid.n_points < 2) throw ValidationError("n_points", "must be >= 2");
  if (!(c.grid.wall_step > 0.0)) throw ValidationError("wall_step", "must be > 0");
  if (!(c.grid.max_step >= c.grid.wall_step))
    throw ValidationError("max_step", "must be >= wall_step");
  return c;
}

}  // namespace cavmol
