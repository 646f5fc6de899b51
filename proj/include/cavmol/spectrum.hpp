#pragma once
// Angle-averaged Franck-Condon emission spectrum of the quasibound diatom.
//
// I(w) = C sum_v int_0^pi dtheta sin(theta) W_theta L(w - w_v(theta)) |A_v(theta)|^2
// with A_v = int dR phi_v(R) c_s(R) phi_gg(R) and L a Lorentzian of HWHM gamma_eff.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "cavmol/bound_states.hpp"
#include "cavmol/scattering.hpp"

namespace cavmol {

/// One-photon recoil energy hbar k^2 / (2 m) of the atomic line, with m = 2 mu [rad/s].
inline double recoil_energy(const SystemParams& p) {
  const double k = p.omega_A / units::speed_of_light;  // [1/m]
  return units::hbar * k * k / (2.0 * 2.0 * p.mu);
}

/// Relative-motion wavenumber sqrt(2 mu E)/hbar for collision energy e [1/a0].
inline double collision_wavenumber(const SystemParams& p, double e) {
  if (!(e > 0.0)) throw DomainError("collision_wavenumber: energy must be > 0");
  return std::sqrt(e / kinetic_constant(p));
}

/// Spherical Bessel j1, with the series near the origin.
inline double spherical_j1(double x) {
  // The closed form loses ~eps / x^2 to cancellation; the truncated series
  // is exact to roundoff below 0.1.
  if (std::abs(x) < 0.1) {
    const double x2 = x * x;
    return x / 3.0 * (1.0 - x2 / 10.0 * (1.0 - x2 / 28.0 * (1.0 - x2 / 54.0)));
  }
  return (std::sin(x) / x - std::cos(x)) / x;
}

/// p-wave ground-pair function k R j1(k R) (asymptotic amplitude 1).
inline std::vector<double> ground_wavefunction(double k, const std::vector<double>& r) {
  std::vector<double> out(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) out[i] = k * r[i] * spherical_j1(k * r[i]);
  return out;
}

/// Symmetric-state admixture (chi_2^(1) + chi_2^(2)) / sqrt(2) of omega_2.
inline std::vector<double> symmetric_admixture(const AdiabaticCurves& c) {
  std::vector<double> out(c.size());
  for (std::size_t k = 0; k < c.size(); ++k)
    out[k] = (c.chi[k](0, 1) + c.chi[k](1, 1)) / std::numbers::sqrt2;
  return out;
}

inline double trapezoid(const std::vector<double>& x, const std::vector<double>& f) {
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (f[i] + f[i - 1]);
  return s;
}

/// int dR phi_v c_s phi_gg on the sample points r.
inline double franck_condon_amplitude(const MorseFit& fit, int v, const std::vector<double>& r,
                                      const std::vector<double>& c_s,
                                      const std::vector<double>& ground) {
  const auto phi = morse_wavefunction(fit, v, r);
  std::vector<double> f(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) f[i] = phi[i] * c_s[i] * ground[i];
  return trapezoid(r, f);
}

struct SpectrumOptions {
  double gamma_eff = units::from_mhz(8.0);
  double e_gg = 0.0;  // 0 selects the recoil energy
  int n_theta = 65;
  int n_radial = 8001;
  /// Emission axis relative to omega_A; an empty range selects
  /// [threshold - 1.25 depth, threshold + 0.25 depth].
  double omega_min = 0.0;
  double omega_max = 0.0;
  int points = 2001;
};

struct SpectrumLine {
  double theta;
  int v;
  double center;  // relative to omega_A [rad/s]
  double weight;  // sin(theta) W_theta |A|^2 dtheta, before normalization
};

struct SpectrumResult {
  Symmetry symmetry = Symmetry::sigma;
  std::vector<double> omega;      // relative to omega_A [rad/s]
  std::vector<double> intensity;  // max 1, or all zero
  std::vector<SpectrumLine> lines;
  double threshold = 0.0;  // omega_2(inf) relative to omega_A
  double depth = 0.0;      // deepest well on the theta grid
  bool empty = false;
};

/// Levels and amplitudes of one orientation class.
struct LevelAmplitudes {
  std::vector<VibrationalLevel> levels;
  std::vector<double> amplitudes;
  double depth = 0.0;
};

namespace detail {

inline LevelAmplitudes level_amplitudes(const SystemParams& p, const RadialGrid& grid, double k) {
  LevelAmplitudes out;
  const auto curves = diagonalize_curves(p, grid);
  const auto well = characterize_well(curves);
  if (!well) return out;
  out.depth = well->depth;
  const auto w = solve_well(curves);
  const auto& r = grid.nodes();
  const auto c_s = symmetric_admixture(curves);
  const auto ground = ground_wavefunction(k, r);
  out.levels = w.levels;
  for (const auto& l : w.levels)
    out.amplitudes.push_back(franck_condon_amplitude(*w.fit, l.v, r, c_s, ground));
  return out;
}

}  // namespace detail

/// Sigma and Pi spectra from one pass over the distinct coupling scales.
inline std::vector<SpectrumResult> emission_spectra(const Config& cfg,
                                                    const std::vector<Symmetry>& symmetries,
                                                    const SpectrumOptions& opt = {},
                                                    unsigned threads = default_threads()) {
  if (!(opt.gamma_eff > 0.0)) throw ValidationError("gamma_eff", "must be > 0");
  if (opt.n_theta < 8) throw ValidationError("n_theta", "must be >= 8");
  if (opt.points < 2) throw ValidationError("points", "must be >= 2");
  const auto& p = cfg.params;
  const double e_gg = opt.e_gg > 0.0 ? opt.e_gg : recoil_energy(p);
  const double k = collision_wavenumber(p, e_gg);
  const auto grid = level_grid(cfg.grid, opt.n_radial);
  const auto thetas = theta_grid(opt.n_theta);
  const double dtheta = thetas[1] - thetas[0];

  std::vector<double> scales;
  for (auto s : symmetries)
    for (double t : thetas) scales.push_back(coupling_scale(s, t));
  const auto per_scale = map_over_scales(scales, threads, [&](double s) {
    if (!(s > 0.0)) return LevelAmplitudes{};
    return detail::level_amplitudes(scaled_coupling(p, s), grid, k);
  });

  const double threshold = asymptotic_eigenpairs(p).values[1];
  double depth = 0.0;
  for (const auto& la : per_scale) depth = std::max(depth, la.depth);

  std::vector<SpectrumResult> out;
  for (std::size_t si = 0; si < symmetries.size(); ++si) {
    SpectrumResult res;
    res.symmetry = symmetries[si];
    res.threshold = threshold;
    res.depth = depth;
    double lo = opt.omega_min, hi = opt.omega_max;
    if (!(hi > lo)) {
      lo = threshold - 1.25 * depth;
      hi = threshold + 0.25 * depth;
      if (!(hi > lo)) {
        lo = threshold - 10.0 * opt.gamma_eff;
        hi = threshold + 10.0 * opt.gamma_eff;
      }
    }
    res.omega = linspace(lo, hi, opt.points);
    res.intensity.assign(res.omega.size(), 0.0);
    for (std::size_t t = 0; t < thetas.size(); ++t) {
      const auto& la = per_scale[si * thetas.size() + t];
      // Trapezoid end weights.
      const double wq = (t == 0 || t + 1 == thetas.size()) ? 0.5 * dtheta : dtheta;
      const double ang = std::sin(thetas[t]) * emission_weight(res.symmetry, thetas[t]) * wq;
      for (std::size_t i = 0; i < la.levels.size(); ++i) {
        const double weight = ang * la.amplitudes[i] * la.amplitudes[i];
        if (!(weight > 0.0)) continue;
        res.lines.push_back({thetas[t], la.levels[i].v, threshold + la.levels[i].energy(), weight});
      }
    }
    // Fixed accumulation order keeps the result independent of the thread count.
    const double g2 = opt.gamma_eff * opt.gamma_eff;
    for (const auto& line : res.lines)
      for (std::size_t j = 0; j < res.omega.size(); ++j) {
        const double d = res.omega[j] - line.center;
        res.intensity[j] += line.weight * g2 / (d * d + g2);
      }
    const double peak = *std::max_element(res.intensity.begin(), res.intensity.end());
    res.empty = !(peak > 0.0);
    if (!res.empty)
      for (auto& v : res.intensity) v /= peak;
    out.push_back(std::move(res));
  }
  return out;
}

inline SpectrumResult emission_spectrum(const Config& cfg, Symmetry sym,
                                        const SpectrumOptions& opt = {},
                                        unsigned threads = default_threads()) {
  return std::move(emission_spectra(cfg, {sym}, opt, threads).front());
}

}  // namespace cavmol
