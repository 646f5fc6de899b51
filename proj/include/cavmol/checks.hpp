#pragma once
// Invariant checks shared by `cavmol validate` and the acceptance runner.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "cavmol/adiabatic.hpp"
#include "cavmol/nonadiabatic.hpp"
#include "cavmol/parallel.hpp"
#include "cavmol/scattering.hpp"

namespace cavmol {

struct CheckResult {
  std::string name;
  double value = 0.0;      // measured defect
  double tolerance = 0.0;  // pass when value <= tolerance
  bool passed() const { return value <= tolerance; }
};

namespace detail {

inline Vec3 sorted3(double a, double b, double c) {
  std::array<double, 3> v{a, b, c};
  std::sort(v.begin(), v.end());
  return {v[0], v[1], v[2]};
}

/// Eigenvalues without the exchange term; exact when omega_B = omega_A.
inline Vec3 no_exchange_values(const SystemParams& p) {
  const double d = p.detuning_c();
  const double k2 = p.kappa_A * p.kappa_A + p.kappa_B * p.kappa_B;
  const double root = std::sqrt(d * d + 4.0 * k2);
  return sorted3(0.0, 0.5 * (d - root), 0.5 * (d + root));
}

/// Eigenvalues without the cavity coupling.
inline Vec3 no_cavity_values(const SystemParams& p, double r) {
  const double v = dipole_coupling(p, r), db = p.detuning_B();
  const double root = std::sqrt(db * db + 4.0 * v * v);
  return sorted3(0.5 * (db - root), 0.5 * (db + root), p.detuning_c());
}

}  // namespace detail

/// Closed forms at kappa = 0 and C3 = 0, the hybridized large-R limit with
/// Omega = sqrt(2 (kA + kB)^2 + (w_s - w_c)^2) for kA = kB, and the
/// perturbative R -> 0 and R -> infinity limits.
inline std::vector<CheckResult> analytic_limit_checks(const SystemParams& p) {
  std::vector<CheckResult> out;
  const double rc = std::cbrt(p.C3 / std::max(std::hypot(p.kappa_A, p.kappa_B), 1.0));
  auto err = [](const Vec3& a, const Vec3& b) { return (a - b).cwiseAbs().maxCoeff(); };

  {
    SystemParams q = p;
    q.kappa_A = q.kappa_B = 0.0;
    double worst = 0.0;
    for (double r : {0.1 * rc, rc, 10.0 * rc}) {
      const double scale = std::max({build_hamiltonian(q, r).norm(), 1.0});
      worst = std::max(worst, err(diagonalize_at(q, r).values, detail::no_cavity_values(q, r)) / scale);
    }
    out.push_back({"kappa=0 closed form (relative)", worst, 1e-10});
  }
  {
    SystemParams q = p;
    q.C3 = 0.0;
    q.omega_B = q.omega_A;
    const double scale = std::max(asymptotic_hamiltonian(q).norm(), 1.0);
    out.push_back({"C3=0 closed form (relative)",
                   err(diagonalize_at(q, rc).values, detail::no_exchange_values(q)) / scale, 1e-10});
    // Hybridized form with the symmetric-state detuning w_s - w_c.
    q.kappa_B = q.kappa_A;
    const double ds = -q.detuning_c();
    const double omega = std::sqrt(2.0 * std::pow(q.kappa_A + q.kappa_B, 2) + ds * ds);
    const Vec3 hybrid = detail::sorted3(0.0, 0.5 * (q.detuning_c() - omega),
                                        0.5 * (q.detuning_c() + omega));
    out.push_back({"large-R hybridized Omega form, kA=kB (relative)",
                   err(diagonalize_at(q, rc).values, hybrid) / scale, 1e-10});
  }
  {
    // R -> 0: omega_A +- C3/R^3 and omega_c up to second-order cavity shifts.
    const double gap_scale = std::max({std::abs(p.kappa_A), std::abs(p.kappa_B),
                                       std::abs(p.detuning_c()), std::abs(p.detuning_B()), 1.0});
    const double r = std::cbrt(p.C3 / (1e4 * gap_scale));
    const double v = dipole_coupling(p, r);
    const double k2 = p.kappa_A * p.kappa_A + p.kappa_B * p.kappa_B;
    const Vec3 lim = detail::sorted3(-v, v, p.detuning_c());
    const double tol = 1.5 * k2 / (v - std::abs(p.detuning_c()) - std::abs(p.detuning_B())) +
                       std::abs(p.detuning_B()) + 1e-10 * v;
    out.push_back({"R->0 limit w_A +- C3/R^3, w_c (absolute / tolerance)",
                   err(diagonalize_at(p, r).values, lim) / tol, 1.0});
  }
  {
    // R -> infinity: asymptotic values, shifted by at most ||dH|| = C3/R^3.
    const double r = 100.0 * rc;
    const double v = dipole_coupling(p, r);
    out.push_back({"R->inf limit (absolute / Weyl bound C3/R^3)",
                   err(diagonalize_at(p, r).values, asymptotic_eigenpairs(p).values) /
                       std::max(v, 1e-300),
                   1.0});
  }
  return out;
}

struct ScatteringCheckValues {
  double unitarity = 0.0;      // max |S^dag S - I| on the open block
  double k_symmetry = 0.0;     // max |K - K^T| / max(1, |K|)
  double k_imaginary = 0.0;    // max |Im K| / max(1, |K|)
  double unitarity_bound = 0.0;  // max (sigma_11 - 4 pi / P1^2) / (4 pi / P1^2)
  std::size_t energies = 0;
};

inline ScatteringCheckValues scattering_checks(const CouplingTables& t,
                                               const std::vector<double>& energies,
                                               const ScatteringOptions& opt = {},
                                               unsigned threads = default_threads()) {
  std::vector<std::array<double, 4>> per(energies.size());
  parallel_for(energies.size(), threads, [&](std::size_t i) {
    const auto m = solve_scattering(t, energies[i], opt);
    const auto no = m.S.rows();
    const double u = (m.S.adjoint() * m.S - MatXc::Identity(no, no)).cwiseAbs().maxCoeff();
    // K diverges where a phase passes pi/2, so its defects are taken relative.
    const double kscale = std::max(1.0, m.K.cwiseAbs().maxCoeff());
    const double ks = (m.K - m.K.transpose()).cwiseAbs().maxCoeff() / kscale;
    const double ki = m.K.imag().cwiseAbs().maxCoeff() / kscale;
    const double p1 = m.channels.P[0].real();
    const double bound = units::bohr2_to_cm2(4.0 * std::numbers::pi / (p1 * p1));
    const double s11 = cross_section(m.channels, m.S)(0, 0);
    per[i] = {u, ks, ki, (s11 - bound) / bound};
  });
  ScatteringCheckValues v;
  v.energies = energies.size();
  v.unitarity_bound = -1.0;
  for (const auto& a : per) {
    v.unitarity = std::max(v.unitarity, a[0]);
    v.k_symmetry = std::max(v.k_symmetry, a[1]);
    v.k_imaginary = std::max(v.k_imaginary, a[2]);
    v.unitarity_bound = std::max(v.unitarity_bound, a[3]);
  }
  return v;
}

}  // namespace cavmol
