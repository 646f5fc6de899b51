#pragma once
// First-derivative nonadiabatic couplings, the adiabatic-to-diabatic
// transformation T(R), and the coupling potential W(R) of the transformed
// scattering equations.

#include <cmath>
#include <functional>
#include <vector>

#include "cavmol/adiabatic.hpp"

namespace cavmol {

/// tau_ij = <chi_i | d/dR | chi_j> at grid nodes and at interval midpoints [a0^-1].
struct TauTable {
  std::vector<Mat3> nodes;
  std::vector<Mat3> midpoints;  // midpoints[k] lies between nodes k and k+1
};

namespace detail {

/// Hellmann-Feynman off-diagonal identity; antisymmetric by construction.
inline Mat3 hellmann_feynman_tau(const Vec3& omega, const Mat3& chi, const Mat3& dh, double r,
                                 double floor_rel = 1e-6) {
  const Mat3 m = chi.transpose() * dh * chi;
  const double scale = std::max(omega.cwiseAbs().maxCoeff(), dh.norm() * r);
  Mat3 tau = Mat3::Zero();
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      const double gap = omega[j] - omega[i];
      if (std::abs(gap) <= floor_rel * scale) {
        // Exact crossings of decoupled states carry no coupling.
        if (std::abs(m(i, j)) <= 1e-12 * dh.norm()) continue;
        throw NumericalError("near-degenerate adiabatic states at R = " + std::to_string(r), r);
      }
      tau(i, j) = m(i, j) / gap;
      tau(j, i) = -tau(i, j);
    }
  }
  return tau;
}

/// exp(a) for antisymmetric 3x3 a (Rodrigues).
inline Mat3 expm_antisymmetric(const Mat3& a) {
  const Vec3 axis(a(2, 1), a(0, 2), a(1, 0));
  const double theta = axis.norm();
  const Mat3 a2 = a * a;
  if (theta < 1e-8) return Mat3::Identity() + a + 0.5 * a2;
  return Mat3::Identity() + (std::sin(theta) / theta) * a +
         ((1.0 - std::cos(theta)) / (theta * theta)) * a2;
}

}  // namespace detail

inline TauTable compute_tau(const AdiabaticCurves& curves) {
  const auto& p = curves.params;
  const std::size_t n = curves.size();
  TauTable t;
  t.nodes.resize(n);
  t.midpoints.resize(n > 0 ? n - 1 : 0);
  for (std::size_t k = 0; k < n; ++k) {
    const double r = curves.r(k);
    t.nodes[k] = detail::hellmann_feynman_tau(curves.omega[k], curves.chi[k],
                                              hamiltonian_derivative(p, r), r);
  }
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double r = 0.5 * (curves.r(k) + curves.r(k + 1));
    auto e = detail::eigen_decompose(build_hamiltonian(p, r), r);
    detail::align_signs(e.vectors, curves.chi[k + 1]);
    t.midpoints[k] =
        detail::hellmann_feynman_tau(e.values, e.vectors, hamiltonian_derivative(p, r), r);
  }
  return t;
}

/// Path-ordered T(R) with T(R_inf) = I, obeying dT/dR = T tau. Accumulated
/// inward with one midpoint-rule exponential per interval.
inline std::vector<Mat3> compute_T(const TauTable& tau, const RadialGrid& grid) {
  const std::size_t n = grid.size();
  std::vector<Mat3> t(n);
  t[n - 1] = Mat3::Identity();
  for (std::size_t k = n - 1; k-- > 0;)
    t[k] = t[k + 1] * detail::expm_antisymmetric(-tau.midpoints[k] * grid.step(k));
  return t;
}

/// Coupling potential of the transformed equations on a grid.
struct CouplingTables {
  RadialGrid grid;
  std::vector<Mat3> W;   // [a0^-2]
  Vec3 thresholds;       // omega_i(inf) [rad/s], relative to omega_A
  double kinetic = 1.0;  // hbar/(2 mu a0^2) [rad/s]
  // Present when built from adiabatic curves.
  std::vector<Mat3> tau;
  std::vector<Mat3> T;

  /// Synthetic coupling table W(R) for model problems.
  static CouplingTables from_function(const RadialGrid& grid,
                                      const std::function<Mat3(double)>& w, Vec3 thresholds,
                                      double kinetic) {
    CouplingTables c;
    c.grid = grid;
    c.thresholds = thresholds;
    c.kinetic = kinetic;
    c.W.resize(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) c.W[k] = w(grid[k]);
    return c;
  }
};

/// W = (T U T^-1 - diag(omega(inf))) / kinetic, with T orthogonal.
inline std::vector<Mat3> compute_W(const AdiabaticCurves& curves, const std::vector<Mat3>& t,
                                   double kinetic) {
  std::vector<Mat3> w(curves.size());
  const Mat3 thresholds = curves.thresholds.asDiagonal();
  for (std::size_t k = 0; k < curves.size(); ++k) {
    Mat3 m = t[k] * curves.omega[k].asDiagonal() * t[k].transpose() - thresholds;
    w[k] = (0.5 / kinetic) * (m + m.transpose());
  }
  return w;
}

/// Full chain: tau -> T -> W on the curves' grid.
inline CouplingTables build_couplings(const AdiabaticCurves& curves) {
  CouplingTables c;
  c.grid = curves.grid;
  c.thresholds = curves.thresholds;
  c.kinetic = kinetic_constant(curves.params);
  auto tau = compute_tau(curves);
  c.T = compute_T(tau, curves.grid);
  c.W = compute_W(curves, c.T, c.kinetic);
  c.tau = std::move(tau.nodes);
  return c;
}

/// Largest deviation of T from orthogonality over the table.
inline double orthogonality_defect(const std::vector<Mat3>& t) {
  double worst = 0.0;
  for (const auto& m : t)
    worst = std::max(worst, (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff());
  return worst;
}

}  // namespace cavmol
