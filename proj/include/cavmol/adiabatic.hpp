#pragma once
// Dressed-state (adiabatic) potentials of the one-excitation manifold.
//
// Basis ordering: |e_A g_B,0>, |e_B g_A,0>, |g_A g_B,1>. All energies are
// measured from omega_A.

#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "cavmol/errors.hpp"
#include "cavmol/grid.hpp"
#include "cavmol/params.hpp"

namespace cavmol {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

/// Resonant dipole-dipole exchange C3/R^3.
inline double dipole_coupling(const SystemParams& p, double r) { return p.C3 / (r * r * r); }

/// One-excitation Hamiltonian at separation r, shifted by -omega_A.
inline Mat3 build_hamiltonian(const SystemParams& p, double r) {
  if (!(r > 0.0)) throw DomainError("build_hamiltonian: R must be > 0");
  const double v = dipole_coupling(p, r);
  Mat3 h;
  h << 0.0, v, p.kappa_A,
       v, p.detuning_B(), p.kappa_B,
       p.kappa_A, p.kappa_B, p.detuning_c();
  return h;
}

/// Asymptotic (C3/R^3 -> 0) Hamiltonian, shifted by -omega_A.
inline Mat3 asymptotic_hamiltonian(const SystemParams& p) {
  Mat3 h;
  h << 0.0, 0.0, p.kappa_A,
       0.0, p.detuning_B(), p.kappa_B,
       p.kappa_A, p.kappa_B, p.detuning_c();
  return h;
}

/// d H / d R: only the exchange elements depend on R.
inline Mat3 hamiltonian_derivative(const SystemParams& p, double r) {
  const double dv = -3.0 * p.C3 / (r * r * r * r);
  Mat3 d = Mat3::Zero();
  d(0, 1) = d(1, 0) = dv;
  return d;
}

struct Eigenpairs {
  Vec3 values;   // ascending
  Mat3 vectors;  // columns
};

namespace detail {

inline Eigenpairs eigen_decompose(const Mat3& h, double r) {
  Eigen::SelfAdjointEigenSolver<Mat3> solver(h);
  if (solver.info() != Eigen::Success)
    throw NumericalError("eigen-solver failed at R = " + std::to_string(r), r);
  return {solver.eigenvalues(), solver.eigenvectors()};
}

/// Flips columns of `v` so each overlaps positively with `reference`.
inline void align_signs(Mat3& v, const Mat3& reference) {
  for (int i = 0; i < 3; ++i)
    if (v.col(i).dot(reference.col(i)) < 0.0) v.col(i) = -v.col(i);
}

/// Sign convention for an isolated point: positive cavity component, or the
/// largest component when the state has no cavity admixture.
inline void canonical_signs(Mat3& v) {
  for (int i = 0; i < 3; ++i) {
    int idx = 2;
    if (std::abs(v(2, i)) < 1e-12) v.col(i).cwiseAbs().maxCoeff(&idx);
    if (v(idx, i) < 0.0) v.col(i) = -v.col(i);
  }
}

}  // namespace detail

/// Eigenpairs at a single R with the canonical sign convention.
inline Eigenpairs diagonalize_at(const SystemParams& p, double r) {
  auto e = detail::eigen_decompose(build_hamiltonian(p, r), r);
  detail::canonical_signs(e.vectors);
  return e;
}

inline Eigenpairs asymptotic_eigenpairs(const SystemParams& p) {
  auto e = detail::eigen_decompose(asymptotic_hamiltonian(p), 0.0);
  detail::canonical_signs(e.vectors);
  return e;
}

/// Adiabatic potentials and phase-continuous eigenvectors on a grid.
struct AdiabaticCurves {
  SystemParams params;
  RadialGrid grid;
  std::vector<Vec3> omega;  // omega_1 < omega_2 < omega_3 per node [rad/s]
  std::vector<Mat3> chi;    // eigenvectors as columns per node
  Vec3 thresholds;          // omega_i(R -> infinity)
  Mat3 chi_asymptotic;

  std::size_t size() const { return omega.size(); }
  double r(std::size_t k) const { return grid[k]; }
};

inline AdiabaticCurves diagonalize_curves(const SystemParams& p, const RadialGrid& grid) {
  AdiabaticCurves c;
  c.params = p;
  c.grid = grid;
  const std::size_t n = grid.size();
  c.omega.resize(n);
  c.chi.resize(n);
  for (std::size_t idx = n; idx-- > 0;) {
    const double r = grid[idx];
    const Mat3 h = build_hamiltonian(p, r);
    auto e = detail::eigen_decompose(h, r);
    const double residual = (h * e.vectors - e.vectors * e.values.asDiagonal()).norm();
    if (residual > 1e-10 * std::max(h.norm(), 1e-300))
      throw NumericalError("eigen residual too large at R = " + std::to_string(r), r);
    if (idx == n - 1) {
      detail::canonical_signs(e.vectors);
    } else {
      detail::align_signs(e.vectors, c.chi[idx + 1]);
    }
    c.omega[idx] = e.values;
    c.chi[idx] = e.vectors;
  }
  const auto asym = asymptotic_eigenpairs(p);
  c.thresholds = asym.values;
  c.chi_asymptotic = asym.vectors;
  return c;
}

/// Largest of |C3/R^3| and |d omega_i/dR| * dR at the outer edge, relative to
/// the smallest threshold separation.
inline double flatness(const AdiabaticCurves& c) {
  const std::size_t n = c.size();
  const double r = c.grid.r_infinity();
  double worst = std::abs(dipole_coupling(c.params, r));
  if (n >= 2)
    for (int i = 0; i < 3; ++i)
      worst = std::max(worst, std::abs(c.omega[n - 1][i] - c.omega[n - 2][i]));
  double gap = std::min(c.thresholds[1] - c.thresholds[0], c.thresholds[2] - c.thresholds[1]);
  if (!(gap > 0.0)) gap = std::max(std::abs(c.thresholds[2] - c.thresholds[0]), 1.0);
  return worst / gap;
}

// ---------------------------------------------------------------------------
// Well of omega_2

struct WellCharacterization {
  double r_c = 0.0;        // position of the omega_2 minimum [a0]
  double depth = 0.0;      // omega_2(inf) - omega_2(R_c) [rad/s]
  double min_value = 0.0;  // omega_2(R_c) relative to omega_A [rad/s]
};

namespace detail {

/// Vertex of the parabola through three points.
inline std::pair<double, double> parabola_vertex(double x0, double y0, double x1, double y1,
                                                 double x2, double y2) {
  const double d01 = (y1 - y0) / (x1 - x0);
  const double d12 = (y2 - y1) / (x2 - x1);
  const double a = (d12 - d01) / (x2 - x0);
  if (!(a > 0.0)) return {x1, y1};
  const double b = d01 - a * (x0 + x1);
  const double xv = -b / (2.0 * a);
  const double yv = y1 + (xv - x1) * (d01 + a * (xv - x0));
  return {xv, yv};
}

}  // namespace detail

/// Locates the interior minimum of omega_2. Returns nullopt when there is no
/// well (no interior minimum below the omega_2 threshold).
inline std::optional<WellCharacterization> characterize_well(const AdiabaticCurves& c) {
  const std::size_t n = c.size();
  if (n < 3) return std::nullopt;
  std::size_t kmin = 0;
  for (std::size_t k = 1; k < n; ++k)
    if (c.omega[k][1] < c.omega[kmin][1]) kmin = k;
  if (kmin == 0 || kmin == n - 1) return std::nullopt;
  const double y0 = c.omega[kmin - 1][1], y1 = c.omega[kmin][1], y2 = c.omega[kmin + 1][1];
  if (!(y0 > y1) && !(y2 > y1)) return std::nullopt;  // flat
  const double threshold = c.thresholds[1];
  const double scale = std::max({std::abs(c.params.kappa_A), std::abs(c.params.kappa_B), 1.0});
  if (!(threshold - y1 > 1e-12 * scale)) return std::nullopt;
  auto [xv, yv] = detail::parabola_vertex(c.r(kmin - 1), y0, c.r(kmin), y1, c.r(kmin + 1), y2);
  WellCharacterization w;
  w.r_c = xv;
  w.min_value = std::min(yv, y1);
  w.depth = threshold - w.min_value;
  return w;
}

/// Well of omega_2 evaluated on a uniform grid spanning `spec`.
inline std::optional<WellCharacterization> well_for(const SystemParams& p, const GridSpec& spec,
                                                    int n_points = 8001) {
  return characterize_well(
      diagonalize_curves(p, RadialGrid::uniform(spec.r_wall, spec.r_infinity, n_points)));
}

/// C3 such that the omega_2 minimum sits at target_rc (to within `tol` a0),
/// found by bisection in log C3; C3 in `p` is ignored.
inline double calibrate_C3(SystemParams p, const GridSpec& spec, double target_rc,
                           double tol = 0.01, int n_points = 8001) {
  if (!(target_rc > spec.r_wall && target_rc < spec.r_infinity))
    throw CalibrationError("calibrate_C3: target outside the radial grid");
  const double coupling = std::hypot(p.kappa_A, p.kappa_B);
  if (!(coupling > 0.0)) throw CalibrationError("calibrate_C3: no atom-cavity coupling, no well");
  auto rc_of = [&](double log_c3) -> std::optional<double> {
    p.C3 = std::exp(log_c3);
    auto w = well_for(p, spec, n_points);
    if (!w) return std::nullopt;
    return w->r_c;
  };
  const double guess = std::log(coupling * target_rc * target_rc * target_rc);
  double lo = guess - std::log(30.0), hi = guess + std::log(30.0);
  auto rlo = rc_of(lo), rhi = rc_of(hi);
  if (!rlo || !rhi || !(*rlo < target_rc) || !(*rhi > target_rc))
    throw CalibrationError("calibrate_C3: interval does not bracket the target");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    auto rm = rc_of(mid);
    if (!rm) throw CalibrationError("calibrate_C3: well disappeared during bisection");
    if (std::abs(*rm - target_rc) < tol) return std::exp(mid);
    (*rm < target_rc ? lo : hi) = mid;
  }
  throw CalibrationError("calibrate_C3: bisection did not converge");
}

// ---------------------------------------------------------------------------
// Parameter sweeps

struct CouplingSweepRow {
  double kappa_A;
  double depth;
  double r_c;
};

/// Depth and position of the omega_2 well versus kappa_A, with kappa_B/kappa_A
/// held fixed. Rows without a well are skipped.
inline std::vector<CouplingSweepRow> sweep_coupling(const SystemParams& p, const GridSpec& spec,
                                                    const std::vector<double>& kappa_values) {
  const double ratio = p.kappa_A > 0.0 ? p.kappa_B / p.kappa_A : 1.0;
  std::vector<CouplingSweepRow> rows;
  rows.reserve(kappa_values.size());
  for (double k : kappa_values) {
    SystemParams q = p;
    q.kappa_A = k;
    q.kappa_B = ratio * k;
    if (auto w = well_for(q, spec)) rows.push_back({k, w->depth, w->r_c});
  }
  return rows;
}

struct DetuningSweepRow {
  double detuning;  // omega_c - omega_A [rad/s]
  double min_value;
  double r_c;
};

inline std::vector<DetuningSweepRow> sweep_detuning(const SystemParams& p, const GridSpec& spec,
                                                    const std::vector<double>& detunings) {
  std::vector<DetuningSweepRow> rows;
  rows.reserve(detunings.size());
  for (double d : detunings) {
    SystemParams q = p;
    q.omega_c = q.omega_A + d;
    if (auto w = well_for(q, spec)) rows.push_back({d, w->min_value, w->r_c});
  }
  return rows;
}

}  // namespace cavmol
