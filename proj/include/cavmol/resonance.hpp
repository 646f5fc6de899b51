#pragma once
// Resonances as cross-section peaks (Lorentzian fits) and as complex zeros of
// det F(E); true bound states as real zeros below the lowest threshold.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cavmol/fit.hpp"
#include "cavmol/scattering.hpp"

namespace cavmol {

enum class ResonanceKind { peak_fit, unfitted, complex_pole, unconverged };

inline const char* to_string(ResonanceKind k) {
  switch (k) {
    case ResonanceKind::peak_fit: return "peak-fit";
    case ResonanceKind::unfitted: return "unfitted";
    case ResonanceKind::complex_pole: return "complex-pole";
    case ResonanceKind::unconverged: return "unconverged";
  }
  return "?";
}

struct Resonance {
  double e_r = 0.0;      // center [rad/s]
  double gamma_r = 0.0;  // FWHM [rad/s]
  ResonanceKind kind = ResonanceKind::unfitted;
  std::optional<cplx> pole;  // E_r - i Gamma_r / 2
  double amplitude = 0.0;    // fitted peak height above background
  double prominence = 0.0;
  int iterations = 0;
};

struct BoundState {
  double e_b = 0.0;  // [rad/s]
};

// ---------------------------------------------------------------------------
// Peak detection

struct Peak {
  std::size_t index;
  double prominence;
  std::size_t left_base;
  std::size_t right_base;
};

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  double m = *mid;
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), mid));
  return m;
}

inline double median_absolute_deviation(const std::vector<double>& y) {
  const double m = median(y);
  std::vector<double> d(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) d[i] = std::abs(y[i] - m);
  return median(d);
}

/// Interior local maxima with their topographic prominence.
inline std::vector<Peak> find_peaks(const std::vector<double>& y, double min_prominence) {
  std::vector<Peak> peaks;
  const std::size_t n = y.size();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(y[i] > y[i - 1] && y[i] >= y[i + 1])) continue;
    std::size_t l = i, lmin = i;
    while (l > 0 && y[l - 1] <= y[i]) {
      --l;
      if (y[l] < y[lmin]) lmin = l;
    }
    std::size_t r = i, rmin = i;
    while (r + 1 < n && y[r + 1] <= y[i]) {
      ++r;
      if (y[r] < y[rmin]) rmin = r;
    }
    const double prom = y[i] - std::max(y[lmin], y[rmin]);
    if (prom > min_prominence) peaks.push_back({i, prom, lmin, rmin});
  }
  return peaks;
}

/// Prominence threshold: 3 median absolute deviations of the residual left
/// after a running median (half-width n/50 samples) removes the slowly varying
/// background, floored at 1e-6 of the largest value.
inline double default_prominence(const std::vector<double>& y) {
  double ymax = 0.0;
  for (double v : y) ymax = std::max(ymax, std::abs(v));
  const std::size_t n = y.size();
  const std::size_t w = std::max<std::size_t>(5, n / 50);
  std::vector<double> resid(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i > w ? i - w : 0, hi = std::min(n, i + w + 1);
    resid[i] = y[i] - median(std::vector<double>(y.begin() + lo, y.begin() + hi));
  }
  return std::max(3.0 * median_absolute_deviation(resid), 1e-6 * ymax);
}

namespace detail {

/// Interpolated crossing of `level` walking from index i in direction dir.
inline double half_crossing(const std::vector<double>& x, const std::vector<double>& y,
                            std::size_t i, int dir, double level, std::size_t stop) {
  std::size_t j = i;
  while (j != stop) {
    const std::size_t k = dir > 0 ? j + 1 : j - 1;
    if (y[k] <= level) {
      const double t = (y[j] - level) / (y[j] - y[k]);
      return x[j] + t * (x[k] - x[j]);
    }
    j = k;
  }
  return x[stop];
}

}  // namespace detail

struct LorentzianFitOptions {
  /// Adds the matching dispersive term B (G/2)(E - E0) / ((E - E0)^2 + (G/2)^2),
  /// which is what an interfering (Fano) resonance becomes after Lorentzian
  /// smoothing.
  bool dispersive = false;
  /// Polynomial order of the background.
  int background_degree = 1;
};

/// Lorentzian A (G/2)^2 / ((E - E0)^2 + (G/2)^2) plus a polynomial background,
/// fitted to the samples in [lo, hi] starting from center e0, FWHM w0 and
/// height a0. Returns nullopt when the fit fails or leaves the window.
inline std::optional<Resonance> fit_lorentzian(const std::vector<double>& e,
                                               const std::vector<double>& y, double e0,
                                               double w0, double a0, double lo, double hi,
                                               const LorentzianFitOptions& opt = {}) {
  if (opt.background_degree < 0 || opt.background_degree > 4)
    throw ValidationError("background_degree", "must be in [0, 4]");
  if (e.size() != y.size()) throw ValidationError("sigma", "length mismatch");
  if (!(w0 > 0.0)) return std::nullopt;
  std::vector<double> u, v;
  double ymax = 0.0;
  for (std::size_t k = 0; k < e.size(); ++k)
    if (e[k] >= lo && e[k] <= hi) ymax = std::max(ymax, std::abs(y[k]));
  const double scale = ymax > 0.0 ? ymax : 1.0;
  double base = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < e.size(); ++k)
    if (e[k] >= lo && e[k] <= hi) {
      u.push_back((e[k] - e0) / w0);
      v.push_back(y[k] / scale);
      base = std::min(base, y[k] / scale);
    }
  const int nb = opt.background_degree + 1;
  const int ib = opt.dispersive ? 4 : 3;
  const int m = static_cast<int>(u.size());
  if (m < ib + nb + 3) return std::nullopt;

  // p = (A, center, G, [B,] c0, c1, ...) in units of w0 and scale.
  auto model = [&](const Eigen::VectorXd& p, double x) {
    const double g2 = 0.25 * p[2] * p[2];
    const double d = x - p[1];
    double f = (p[0] * g2) / (d * d + g2);
    if (opt.dispersive) f += p[3] * 0.5 * std::abs(p[2]) * d / (d * d + g2);
    double bg = 0.0;
    for (int i = nb; i-- > 0;) bg = bg * x + p[ib + i];
    return f + bg;
  };
  Eigen::VectorXd p0 = Eigen::VectorXd::Zero(ib + nb);
  p0[0] = a0 / scale;
  p0[2] = 1.0;
  p0[ib] = base;
  const auto fit = least_squares(
      [&](const Eigen::VectorXd& p, Eigen::VectorXd& f) {
        for (int k = 0; k < m; ++k) f[k] = model(p, u[k]) - v[k];
      },
      p0, m);
  const double g = std::abs(fit.x[2]);
  const double center = fit.x[1];
  if (!fit.converged || !(fit.x[0] > 0.0) || !(g > 0.0) || center < u.front() ||
      center > u.back())
    return std::nullopt;
  Resonance res;
  res.e_r = e0 + center * w0;
  res.gamma_r = g * w0;
  res.amplitude = fit.x[0] * scale;
  res.prominence = a0;
  res.kind = ResonanceKind::peak_fit;
  return res;
}

/// Fit around one detected peak, within three half-prominence widths.
inline Resonance fit_peak(const std::vector<double>& e, const std::vector<double>& y,
                          const Peak& pk, const LorentzianFitOptions& opt = {}) {
  const std::size_t i = pk.index;
  const double half = y[i] - 0.5 * pk.prominence;
  const double el = detail::half_crossing(e, y, i, -1, half, pk.left_base);
  const double er = detail::half_crossing(e, y, i, +1, half, pk.right_base);
  const double w0 = std::max(er - el, 1e-300);
  Resonance res;
  res.e_r = e[i];
  res.gamma_r = w0;
  res.amplitude = pk.prominence;
  res.prominence = pk.prominence;
  res.kind = ResonanceKind::unfitted;
  const double lo = std::max(e[pk.left_base], e[i] - 3.0 * w0);
  const double hi = std::min(e[pk.right_base], e[i] + 3.0 * w0);
  if (auto f = fit_lorentzian(e, y, e[i], w0, pk.prominence, lo, hi, opt)) {
    f->prominence = pk.prominence;
    return *f;
  }
  return res;
}

/// Peaks above the prominence threshold, each fitted to a Lorentzian on a
/// linear background. Non-convergent fits are kept as kind `unfitted` with
/// the raw maximum and half-prominence width.
inline std::vector<Resonance> scan_and_fit(const std::vector<double>& e,
                                           const std::vector<double>& sigma,
                                           std::optional<double> min_prominence = {},
                                           const LorentzianFitOptions& opt = {}) {
  if (e.size() != sigma.size()) throw ValidationError("sigma", "length mismatch");
  const double thr = min_prominence.value_or(default_prominence(sigma));
  std::vector<Resonance> out;
  for (const auto& pk : find_peaks(sigma, thr)) out.push_back(fit_peak(e, sigma, pk, opt));
  return out;
}

// ---------------------------------------------------------------------------
// Adaptive energy scans

struct AdaptiveScanOptions {
  int coarse_points = 2001;
  /// Refine an interval when S11 at its midpoint deviates from the chord by
  /// more than this.
  double tolerance = 0.02;
  double min_spacing = 0.0;  // [rad/s]; 0 selects (emax - emin) * 1e-7
  std::size_t max_points = 100000;
};

/// Coarse uniform scan, then repeated bisection of intervals across which
/// S11 is not resolved. Returns points sorted by energy.
inline std::vector<ScatterPoint> adaptive_scan(const CouplingTables& t, double emin, double emax,
                                               const AdaptiveScanOptions& aopt = {},
                                               const ScatteringOptions& sopt = {},
                                               unsigned threads = default_threads()) {
  if (!(emax > emin)) throw ValidationError("energy", "empty range (emax must exceed emin)");
  auto pts = scan_energies(t, linspace(emin, emax, aopt.coarse_points), sopt, threads);
  const double min_dx = aopt.min_spacing > 0.0 ? aopt.min_spacing : (emax - emin) * 1e-7;
  std::vector<char> flagged(pts.size() - 1, 1);
  while (pts.size() < aopt.max_points) {
    std::vector<double> mids;
    std::vector<std::size_t> where;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
      if (flagged[i] && pts[i + 1].E - pts[i].E > 2.0 * min_dx) {
        mids.push_back(0.5 * (pts[i].E + pts[i + 1].E));
        where.push_back(i);
      }
    if (mids.empty()) break;
    auto mid_pts = scan_energies(t, mids, sopt, threads);
    std::vector<ScatterPoint> merged;
    std::vector<char> next;
    merged.reserve(pts.size() + mids.size());
    std::size_t w = 0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      merged.push_back(pts[i]);
      if (w < where.size() && where[w] == i) {
        const auto& m = mid_pts[w];
        const bool bad = std::abs(m.S11 - 0.5 * (pts[i].S11 + pts[i + 1].S11)) > aopt.tolerance;
        merged.push_back(m);
        next.push_back(bad);
        next.push_back(bad);
        ++w;
      } else {
        next.push_back(0);
      }
    }
    merged.push_back(pts.back());
    pts = std::move(merged);
    flagged = std::move(next);
  }
  return pts;
}

// ---------------------------------------------------------------------------
// det F on and off the real axis

/// exp(log det F - reference), extrapolated over grids h, 2h, 4h like S.
class JostDeterminant {
 public:
  JostDeterminant(const CouplingTables& t, int richardson_levels = 2,
                  double renorm_threshold = 1e4)
      : t_(t),
        levels_(extrapolation_levels(t.grid, richardson_levels)),
        renorm_(renorm_threshold) {}

  std::vector<cplx> log_dets(cplx E) const {
    const auto ch = make_channels(E, t_);
    std::vector<cplx> out;
    for (int m = 0; m <= levels_; ++m) out.push_back(log_det_jost(t_, ch, 1 << m, renorm_));
    return out;
  }

  void set_reference(cplx E) { reference_ = log_dets(E).front(); }
  void set_reference_log(cplx log_value) { reference_ = log_value; }
  cplx reference() const { return reference_; }

  cplx operator()(cplx E) const { return combine(log_dets(E), reference_); }

  /// Richardson combination of exp(log det - ref) over the stride levels.
  static cplx combine(const std::vector<cplx>& ld, cplx ref) {
    std::vector<MatXc> v;
    for (const auto& l : ld) v.push_back(MatXc::Constant(1, 1, std::exp(l - ref)));
    return richardson(v, 2)(0, 0);
  }

 private:
  const CouplingTables& t_;
  int levels_;
  double renorm_;
  cplx reference_{0.0, 0.0};
};

struct PoleOptions {
  int max_iterations = 60;
  /// Converged when the secant step is below tolerance * (seed width) and
  /// |det F| has dropped below sqrt(tolerance) of its previous value.
  double tolerance = 1e-8;
  /// Poles farther than this many seed widths from the seed are rejected.
  double search_radius = 10.0;
  int richardson_levels = 2;
};

/// Secant iteration on det F(E) in the complex plane from one seed.
inline Resonance refine_pole(const CouplingTables& t, const Resonance& seed,
                             const PoleOptions& opt = {}) {
  const double w = seed.gamma_r > 0.0 ? seed.gamma_r : 1e-6 * std::max(std::abs(seed.e_r), 1.0);
  JostDeterminant det(t, opt.richardson_levels);
  cplx e0(seed.e_r, -0.25 * w), e1(seed.e_r, -0.5 * w);
  Resonance out = seed;
  out.kind = ResonanceKind::unconverged;
  out.pole.reset();
  try {
    auto ld0 = det.log_dets(e0), ld1 = det.log_dets(e1);
    for (int it = 1; it <= opt.max_iterations; ++it) {
      out.iterations = it;
      // det F carries a large analytic exponential factor, so values are
      // re-referenced at the newest iterate to keep the secant well scaled.
      const cplx ref = ld1.front();
      const cplx f0 = JostDeterminant::combine(ld0, ref);
      const cplx f1 = JostDeterminant::combine(ld1, ref);
      if (f1 == f0) break;
      cplx e2 = e1 - f1 * (e1 - e0) / (f1 - f0);
      // Stay on the side where the continuation is defined.
      if (e2.imag() > 0.0) e2 = cplx(e2.real(), -0.5 * std::abs(e2.imag()));
      if (std::abs(e2 - cplx(seed.e_r, 0.0)) > opt.search_radius * w) break;
      const double step = std::abs(e2 - e1);
      e0 = e1;
      ld0 = std::move(ld1);
      e1 = e2;
      ld1 = det.log_dets(e1);
      const double resid = std::abs(JostDeterminant::combine(ld1, ld0.front()));
      if (step < opt.tolerance * std::max(w, std::abs(e1.imag())) &&
          resid < std::sqrt(opt.tolerance)) {
        if (e1.imag() < 0.0) {
          out.kind = ResonanceKind::complex_pole;
          out.pole = e1;
          out.e_r = e1.real();
          out.gamma_r = -2.0 * e1.imag();
        }
        break;
      }
    }
  } catch (const NumericalError&) {
  } catch (const DomainError&) {
  }
  return out;
}

inline std::vector<Resonance> find_poles(const CouplingTables& t,
                                         const std::vector<Resonance>& seeds,
                                         const PoleOptions& opt = {},
                                         unsigned threads = default_threads()) {
  std::vector<Resonance> out(seeds.size());
  parallel_for(seeds.size(), threads,
               [&](std::size_t i) { out[i] = refine_pole(t, seeds[i], opt); });
  return out;
}

/// Real zeros of det F in [e_lo, e_hi] below the lowest threshold: sign
/// scan on `n_scan` points, then bisection.
inline std::vector<BoundState> find_bound_states(const CouplingTables& t, double e_lo,
                                                 double e_hi, int n_scan = 400,
                                                 int richardson_levels = 2,
                                                 unsigned threads = default_threads()) {
  const double lowest = t.thresholds.minCoeff();
  if (!(e_hi < lowest)) throw ValidationError("e_window", "must lie below the lowest threshold");
  if (!(e_lo < e_hi)) throw ValidationError("e_window", "empty window");
  const auto es = linspace(e_lo, e_hi, n_scan);
  std::vector<int> sign(es.size());
  parallel_for(es.size(), threads, [&](std::size_t i) {
    const auto ch = make_channels(es[i], t);
    sign[i] = std::cos(log_det_jost(t, ch).imag()) >= 0.0 ? 1 : -1;
  });
  std::vector<std::size_t> brackets;
  for (std::size_t i = 0; i + 1 < es.size(); ++i)
    if (sign[i] != sign[i + 1]) brackets.push_back(i);
  std::vector<BoundState> out(brackets.size());
  parallel_for(brackets.size(), threads, [&](std::size_t b) {
    double lo = es[brackets[b]], hi = es[brackets[b] + 1];
    JostDeterminant det(t, richardson_levels);
    det.set_reference(lo);
    double flo = det(lo).real();
    for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(std::abs(lo), 1.0); ++it) {
      const double mid = 0.5 * (lo + hi);
      const double fm = det(mid).real();
      if ((fm > 0.0) == (flo > 0.0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    out[b].e_b = 0.5 * (lo + hi);
  });
  return out;
}

}  // namespace cavmol
