#pragma once
// Morse model of the omega_2 well, its vibrational levels, and the
// Landau-Zener-Stueckelberg correction from the omega_1/omega_2 pseudocrossing.
//
// Energies of levels are measured from the omega_2 threshold, so bound
// levels are negative.

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cavmol/adiabatic.hpp"
#include "cavmol/errors.hpp"
#include "cavmol/fit.hpp"
#include "cavmol/parallel.hpp"

namespace cavmol {

/// V(R) = d_e (1 - exp(-a (R - r_e)))^2 - d_e for -K d^2/dR^2 + V.
struct MorseFit {
  double d_e = 0.0;          // [rad/s]
  double r_e = 0.0;          // [a0]
  double a = 0.0;            // [1/a0]
  double kinetic = 0.0;      // hbar/(2 mu a0^2) [rad/s]
  double omega_e = 0.0;      // [rad/s]
  double omega_e_x_e = 0.0;  // [rad/s]
  double rms_residual = 0.0; // [rad/s]

  /// sqrt(d_e/K)/a; levels exist for v + 1/2 < lambda.
  double lambda() const { return std::sqrt(d_e / kinetic) / a; }
  int v_max() const { return static_cast<int>(std::floor(lambda() - 0.5)); }
  double potential(double r) const {
    const double x = 1.0 - std::exp(-a * (r - r_e));
    return d_e * x * x - d_e;
  }
  double level(int v) const {
    const double n = v + 0.5;
    return omega_e * n - omega_e_x_e * n * n - d_e;
  }
  /// dE_v/dv, the angular frequency of classical vibration.
  double vibration_frequency(int v) const { return omega_e - 2.0 * omega_e_x_e * (v + 0.5); }
};

inline MorseFit make_morse(double d_e, double r_e, double a, double kinetic) {
  if (!(d_e > 0.0) || !(a > 0.0) || !(kinetic > 0.0))
    throw DomainError("make_morse: d_e, a and K must be > 0");
  MorseFit m;
  m.d_e = d_e;
  m.r_e = r_e;
  m.a = a;
  m.kinetic = kinetic;
  m.omega_e = 2.0 * a * std::sqrt(kinetic * d_e);
  m.omega_e_x_e = kinetic * a * a;
  return m;
}

/// Least-squares Morse fit of samples y(r) (well bottom at -d_e, threshold 0)
/// on the window [r_c - 3/a, r_c + 6/a] around the sampled minimum r_c; the
/// window is rebuilt from the fitted a until it settles.
inline MorseFit fit_morse_samples(const std::vector<double>& r, const std::vector<double>& y,
                                  double d_guess, double r_c, double a_guess,
                                  double kinetic, int max_rounds = 20) {
  if (r.size() != y.size() || r.size() < 4) throw DomainError("fit_morse: need >= 4 samples");
  if (!(d_guess > 0.0) || !(a_guess > 0.0)) throw DomainError("fit_morse: no well");
  double d = d_guess, re = r_c, a = a_guess, rms = 0.0;
  for (int round = 0; round < max_rounds; ++round) {
    const double lo = r_c - 3.0 / a, hi = r_c + 6.0 / a;
    std::vector<double> wr, wy;
    for (std::size_t k = 0; k < r.size(); ++k)
      if (r[k] >= lo && r[k] <= hi) {
        wr.push_back(r[k]);
        wy.push_back(y[k]);
      }
    if (wr.size() < 4) throw NumericalError("fit_morse: too few samples in the fit window", re);
    // Scaled unknowns: depth in units of d_guess, position in units of 1/a_guess.
    const double ds = d_guess, rs = 1.0 / a_guess, r0 = r_c;
    Eigen::VectorXd x0(3);
    x0 << d / ds, (re - r0) / rs, a * rs;
    const int m = static_cast<int>(wr.size());
    auto res = least_squares(
        [&](const Eigen::VectorXd& x, Eigen::VectorXd& f) {
          const double dd = x[0], rr = r0 + x[1] * rs, aa = x[2] / rs;
          for (int i = 0; i < m; ++i) {
            const double t = 1.0 - std::exp(-aa * (wr[i] - rr));
            f[i] = dd * t * t - dd - wy[i] / ds;
          }
        },
        x0, m, 1e-14);
    if (!res.x.allFinite() || !(res.x[0] > 0.0) || !(res.x[2] > 0.0))
      throw NumericalError("fit_morse: fit diverged", re);
    d = res.x[0] * ds;
    re = r0 + res.x[1] * rs;
    a = res.x[2] / rs;
    rms = res.rms * ds;
    const double a_prev = x0[2] / rs;
    if (std::abs(a - a_prev) < 1e-10 * a) break;
  }
  auto fit = make_morse(d, re, a, kinetic);
  fit.rms_residual = rms;
  return fit;
}

/// Morse fit of omega_2(R) - omega_2(inf). Throws DomainError without a well.
inline MorseFit fit_morse(const AdiabaticCurves& c) {
  const auto well = characterize_well(c);
  if (!well) throw DomainError("fit_morse: omega_2 has no well");
  std::vector<double> r(c.size()), y(c.size());
  std::size_t kmin = 0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    r[k] = c.r(k);
    y[k] = c.omega[k][1] - c.thresholds[1];
    if (y[k] < y[kmin]) kmin = k;
  }
  // Curvature at the minimum gives the starting range parameter: V'' = 2 d a^2.
  double a_guess = 1.0 / (0.1 * well->r_c);
  if (kmin > 0 && kmin + 1 < c.size()) {
    const double h0 = r[kmin] - r[kmin - 1], h1 = r[kmin + 1] - r[kmin];
    const double curv =
        2.0 * (h0 * y[kmin + 1] - (h0 + h1) * y[kmin] + h1 * y[kmin - 1]) / (h0 * h1 * (h0 + h1));
    if (curv > 0.0) a_guess = std::sqrt(curv / (2.0 * well->depth));
  }
  return fit_morse_samples(r, y, well->depth, well->r_c, a_guess, kinetic_constant(c.params));
}

// ---------------------------------------------------------------------------
// Levels and eigenfunctions

struct VibrationalLevel {
  int v = 0;
  double e_v = 0.0;        // below the omega_2 threshold [rad/s]
  double lzs_shift = 0.0;  // [rad/s]
  double lzs_width = 0.0;  // [rad/s]
  double theta = 0.0;      // [rad]
  double p_lz = 0.0;

  double energy() const { return e_v + lzs_shift; }
};

/// Analytic levels v = 0 .. v_max (all have e_v < 0).
inline std::vector<VibrationalLevel> morse_levels(const MorseFit& fit, double theta = 0.0) {
  std::vector<VibrationalLevel> out;
  for (int v = 0; v <= fit.v_max(); ++v) {
    const double e = fit.level(v);
    if (!(e < 0.0)) break;
    VibrationalLevel l;
    l.v = v;
    l.e_v = e;
    l.theta = theta;
    out.push_back(l);
  }
  return out;
}

namespace detail {

/// L_v^alpha(z) with rescaling against overflow; returns (value, log scale).
inline std::pair<double, double> laguerre_scaled(int v, double alpha, double z) {
  double l0 = 1.0, l1 = 1.0 + alpha - z, log_scale = 0.0;
  if (v == 0) return {l0, 0.0};
  for (int k = 1; k < v; ++k) {
    const double l2 = ((2.0 * k + 1.0 + alpha - z) * l1 - (k + alpha) * l0) / (k + 1.0);
    l0 = l1;
    l1 = l2;
    if (std::abs(l1) > 1e200) {
      l0 *= 1e-200;
      l1 *= 1e-200;
      log_scale += 200.0 * std::numbers::ln10;
    }
  }
  return {l1, log_scale};
}

}  // namespace detail

/// Normalized Morse eigenfunction v sampled at r (unit L2 norm over the real line).
inline std::vector<double> morse_wavefunction(const MorseFit& fit, int v,
                                              const std::vector<double>& r) {
  if (v < 0 || v > fit.v_max()) throw DomainError("morse_wavefunction: v out of range");
  const double lam = fit.lambda();
  const double alpha = 2.0 * lam - 2.0 * v - 1.0;
  const double log_norm = 0.5 * (std::log(fit.a) + std::log(alpha) + std::lgamma(v + 1.0) -
                                 std::lgamma(2.0 * lam - v));
  const std::size_t n = r.size();
  std::vector<double> log_z(n), z(n);
  double z_max = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    log_z[i] = std::log(2.0 * lam) - fit.a * (r[i] - fit.r_e);
    z[i] = std::exp(log_z[i]);
    z_max = std::max(z_max, z[i]);
  }
  std::vector<double> out(n);
  // |L_v^alpha(z)| <= C(v + alpha, v) e^{z/2}; the plain recurrence is safe
  // well below the overflow threshold.
  const double bound = std::lgamma(v + alpha + 1.0) - std::lgamma(v + 1.0) -
                       std::lgamma(alpha + 1.0) + 0.5 * z_max;
  if (bound < 600.0) {
    // Recurrence over all points at once (vectorizes over i).
    std::vector<double> l0(n, 1.0), l1(n);
    for (std::size_t i = 0; i < n; ++i) l1[i] = 1.0 + alpha - z[i];
    if (v == 0) l1 = l0;
    for (int k = 1; k < v; ++k) {
      const double inv = 1.0 / (k + 1.0), c1 = 2.0 * k + 1.0 + alpha, c0 = k + alpha;
      for (std::size_t i = 0; i < n; ++i) {
        const double l2 = ((c1 - z[i]) * l1[i] - c0 * l0[i]) * inv;
        l0[i] = l1[i];
        l1[i] = l2;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double e = log_norm + 0.5 * alpha * log_z[i] - 0.5 * z[i];
      out[i] = e < -745.0 ? 0.0 : std::exp(e) * l1[i];
    }
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto [lv, log_scale] = detail::laguerre_scaled(v, alpha, z[i]);
    if (lv == 0.0) continue;
    const double log_mag =
        log_norm + 0.5 * alpha * log_z[i] - 0.5 * z[i] + std::log(std::abs(lv)) + log_scale;
    out[i] = log_mag < -745.0 ? 0.0 : std::copysign(std::exp(log_mag), lv);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Landau-Zener-Stueckelberg correction

struct CrossingParameters {
  double r_c = 0.0;               // [a0]
  double v12 = 0.0;               // adiabatic half-gap at r_c [rad/s]
  double slope_difference = 0.0;  // |F_1 - F_2| of the diabats [rad/s / a0]
  double well_bottom = 0.0;       // omega_2(r_c) - omega_2(inf) [rad/s]
};

namespace detail {

inline double interpolate(const std::vector<double>& x, const std::vector<double>& y, double xq) {
  auto it = std::upper_bound(x.begin(), x.end(), xq);
  if (it == x.begin()) return y.front();
  if (it == x.end()) return y.back();
  const std::size_t k = static_cast<std::size_t>(it - x.begin());
  const double t = (xq - x[k - 1]) / (x[k] - x[k - 1]);
  return (1.0 - t) * y[k - 1] + t * y[k];
}

/// Slope of the least-squares line through (x, y).
inline double line_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  return sxy / sxx;
}

}  // namespace detail

/// Two-state diabatization of omega_1/omega_2 around the well: with constant
/// coupling V12 the diabats are E_bar -+ sgn(R - R_c) sqrt(Delta^2 - V12^2),
/// whose slopes come from straight-line fits over R_c +- 5/a.
inline CrossingParameters crossing_parameters(const AdiabaticCurves& c, const MorseFit& fit) {
  const auto well = characterize_well(c);
  if (!well) throw DomainError("crossing_parameters: omega_2 has no well");
  std::vector<double> r(c.size()), half_gap(c.size());
  for (std::size_t k = 0; k < c.size(); ++k) {
    r[k] = c.r(k);
    half_gap[k] = 0.5 * (c.omega[k][1] - c.omega[k][0]);
  }
  CrossingParameters x;
  x.r_c = well->r_c;
  x.v12 = detail::interpolate(r, half_gap, x.r_c);
  x.well_bottom = well->min_value - c.thresholds[1];
  std::vector<double> wr, d1, d2;
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (std::abs(r[k] - x.r_c) > 5.0 / fit.a) continue;
    const double mean = 0.5 * (c.omega[k][1] + c.omega[k][0]);
    const double d = std::copysign(
        std::sqrt(std::max(half_gap[k] * half_gap[k] - x.v12 * x.v12, 0.0)), r[k] - x.r_c);
    wr.push_back(r[k]);
    d1.push_back(mean - d);
    d2.push_back(mean + d);
  }
  if (wr.size() < 3) throw NumericalError("crossing_parameters: window too narrow", x.r_c);
  x.slope_difference = std::abs(detail::line_slope(wr, d1) - detail::line_slope(wr, d2));
  return x;
}

/// exp(-2 pi V12^2 / (v |dF|)), with hbar = 1.
inline double landau_zener_probability(double v12, double velocity, double slope_difference) {
  if (!(velocity > 0.0) || !(slope_difference > 0.0)) return 0.0;
  return std::exp(-2.0 * std::numbers::pi * v12 * v12 / (velocity * slope_difference));
}

/// log Gamma(z) for Re z > 0: recurrence up to Re z >= 10, then Stirling.
inline std::complex<double> log_gamma(std::complex<double> z) {
  std::complex<double> shift = 0.0;
  while (z.real() < 10.0) {
    shift += std::log(z);
    z += 1.0;
  }
  const std::complex<double> zi = 1.0 / z, zi2 = zi * zi;
  const std::complex<double> series =
      zi * (1.0 / 12.0 - zi2 * (1.0 / 360.0 - zi2 * (1.0 / 1260.0 - zi2 * (1.0 / 1680.0))));
  return (z - 0.5) * std::log(z) - z + 0.5 * std::log(2.0 * std::numbers::pi) + series - shift;
}

/// Stokes phase pi/4 + delta (ln delta - 1) + arg Gamma(1 - i delta) of the
/// LZS connection formula; exp(-2 pi delta) is the LZ probability.
inline double stokes_phase(double delta) {
  if (!(delta >= 0.0)) throw DomainError("stokes_phase: delta must be >= 0");
  if (delta == 0.0) return std::numbers::pi / 4.0;
  return std::numbers::pi / 4.0 + delta * (std::log(delta) - 1.0) +
         log_gamma({1.0, -delta}).imag();
}

/// Adds the LZS width nu_v P_LZ and shift nu_v phi_S, with nu_v = omega_v / 2 pi
/// from the Morse level spacing. Levels pushed to or above threshold are dropped.
inline std::vector<VibrationalLevel> lzs_correct(std::vector<VibrationalLevel> levels,
                                                 const CrossingParameters& x,
                                                 const MorseFit& fit) {
  std::vector<VibrationalLevel> out;
  for (auto& l : levels) {
    const double kinetic_at_rc = l.e_v - x.well_bottom;
    if (kinetic_at_rc > 0.0) {
      const double velocity = 2.0 * std::sqrt(fit.kinetic * kinetic_at_rc);  // [a0/s]
      const double delta = x.v12 * x.v12 / (velocity * x.slope_difference);
      const double nu = fit.vibration_frequency(l.v) / (2.0 * std::numbers::pi);
      l.p_lz = std::exp(-2.0 * std::numbers::pi * delta);
      l.lzs_width = nu * l.p_lz;
      l.lzs_shift = nu * stokes_phase(delta);
    } else {
      l.p_lz = 0.0;
      l.lzs_width = 0.0;
      l.lzs_shift = 0.0;
    }
    if (l.energy() < 0.0) out.push_back(l);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Orientation dependence

enum class Symmetry { sigma, pi };

inline const char* to_string(Symmetry s) { return s == Symmetry::sigma ? "sigma" : "pi"; }

inline Symmetry parse_symmetry(const std::string& s) {
  if (s == "sigma" || s == "Sigma") return Symmetry::sigma;
  if (s == "pi" || s == "Pi") return Symmetry::pi;
  throw ValidationError("symmetry", "must be 'sigma' or 'pi'");
}

/// kappa(theta) / kappa: sin(theta) for Sigma, |cos(theta)| for Pi.
inline double coupling_scale(Symmetry s, double theta) {
  return s == Symmetry::sigma ? std::sin(theta) : std::abs(std::cos(theta));
}

/// Emission weight W_theta: sin^2 for Sigma, cos^2 for Pi.
inline double emission_weight(Symmetry s, double theta) {
  const double c = s == Symmetry::sigma ? std::sin(theta) : std::cos(theta);
  return c * c;
}

inline std::vector<double> theta_grid(int n) {
  if (n < 2) throw ValidationError("n_theta", "must be >= 2");
  std::vector<double> t(n);
  for (int k = 0; k < n; ++k) t[k] = std::numbers::pi * k / (n - 1);
  return t;
}

inline SystemParams scaled_coupling(SystemParams p, double s) {
  p.kappa_A *= s;
  p.kappa_B *= s;
  return p;
}

/// Evaluates task(scale) once per distinct coupling scale (to 1e-12) and
/// returns the results in the order of `scales`. Many theta points share a
/// scale (sin is symmetric about pi/2, and |cos| samples coincide with sin).
template <class Task>
auto map_over_scales(const std::vector<double>& scales, unsigned threads, Task&& task)
    -> std::vector<decltype(task(0.0))> {
  std::map<long long, std::size_t> index;
  std::vector<double> unique;
  std::vector<std::size_t> slot(scales.size());
  for (std::size_t i = 0; i < scales.size(); ++i) {
    const long long key = std::llround(scales[i] * 1e12);
    auto [it, inserted] = index.emplace(key, unique.size());
    if (inserted) unique.push_back(scales[i]);
    slot[i] = it->second;
  }
  std::vector<decltype(task(0.0))> computed(unique.size());
  parallel_for(unique.size(), threads, [&](std::size_t i) { computed[i] = task(unique[i]); });
  std::vector<decltype(task(0.0))> out(scales.size());
  for (std::size_t i = 0; i < scales.size(); ++i) out[i] = computed[slot[i]];
  return out;
}

struct WellLevels {
  std::optional<MorseFit> fit;
  std::optional<CrossingParameters> crossing;
  std::vector<VibrationalLevel> levels;  // LZS-corrected
};

/// Uniform grid used for the fixed-nuclei curves of the level pipeline.
inline RadialGrid level_grid(const GridSpec& g, int n_points) {
  return RadialGrid::uniform(g.r_wall, g.r_infinity, n_points);
}

/// Morse fit, levels and LZS correction for one set of parameters; empty
/// when omega_2 has no well.
inline WellLevels solve_well(const AdiabaticCurves& c, double theta = 0.0) {
  WellLevels w;
  if (!characterize_well(c)) return w;
  w.fit = fit_morse(c);
  w.crossing = crossing_parameters(c, *w.fit);
  w.levels = lzs_correct(morse_levels(*w.fit, theta), *w.crossing, *w.fit);
  return w;
}

struct LevelsOptions {
  int n_theta = 65;
  int n_radial = 8001;
};

/// LZS-corrected levels on the theta grid, flattened in (theta, v) order.
inline std::vector<VibrationalLevel> levels_vs_theta(const Config& cfg, Symmetry sym,
                                                     const LevelsOptions& opt = {},
                                                     unsigned threads = default_threads()) {
  const auto thetas = theta_grid(opt.n_theta);
  std::vector<double> scales(thetas.size());
  for (std::size_t i = 0; i < thetas.size(); ++i) scales[i] = coupling_scale(sym, thetas[i]);
  const auto grid = level_grid(cfg.grid, opt.n_radial);
  const auto per_scale = map_over_scales(scales, threads, [&](double s) {
    if (!(s > 0.0)) return std::vector<VibrationalLevel>{};
    return solve_well(diagonalize_curves(scaled_coupling(cfg.params, s), grid)).levels;
  });
  std::vector<VibrationalLevel> out;
  for (std::size_t i = 0; i < thetas.size(); ++i)
    for (auto l : per_scale[i]) {
      l.theta = thetas[i];
      out.push_back(l);
    }
  return out;
}

}  // namespace cavmol
