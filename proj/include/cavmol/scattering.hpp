#pragma once
// Three-channel radial scattering in the transformed representation
//
//   Phi'' + P^2 Phi = W(R) Phi,   P_n^2 = (E - omega_n(inf)) / kinetic,
//
// solved for the regular solution that vanishes at the hard wall. The radial
// coordinate inside the propagators is x = R - r_wall.
//
// Primary propagator: trapezoidal quadrature of the Volterra equation
//   Phi(x) = J(x) + int_0^x G(x, x') W(x') Phi(x') dx',
//   G = sin(P(x - x')) / P,
// evaluated as exact free flow between nodes plus an impulse W Phi w_j at
// each node. Both forms produce identical numbers; the second needs O(n)
// work instead of O(n^2). Oracle: Johnson's log-derivative method.

#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "cavmol/errors.hpp"
#include "cavmol/nonadiabatic.hpp"
#include "cavmol/parallel.hpp"
#include "cavmol/units.hpp"

namespace cavmol {

using cplx = std::complex<double>;
using Mat3c = Eigen::Matrix3cd;
using MatXc = Eigen::MatrixXcd;

inline constexpr cplx I_unit{0.0, 1.0};

struct ChannelContext {
  cplx E;               // [rad/s], relative to omega_A
  Vec3 thresholds;      // [rad/s]
  double kinetic = 1.0; // [rad/s a0^2]
  std::array<cplx, 3> P{};
  std::array<bool, 3> open{};

  cplx p2(int n) const { return (E - thresholds[n]) / kinetic; }
  std::vector<int> open_indices() const {
    std::vector<int> idx;
    for (int n = 0; n < 3; ++n)
      if (open[n]) idx.push_back(n);
    return idx;
  }
};

/// Channel momenta on the branch Im P >= 0 for closed channels (Re E below
/// threshold) and the principal root for open ones. The same rules continue
/// the momenta to complex E.
inline ChannelContext make_channels(cplx E, const Vec3& thresholds, double kinetic) {
  ChannelContext ch;
  ch.E = E;
  ch.thresholds = thresholds;
  ch.kinetic = kinetic;
  for (int n = 0; n < 3; ++n) {
    const double scale = std::max({std::abs(E), std::abs(thresholds[n]), 1.0});
    if (std::abs(E - thresholds[n]) <= 4.0 * std::numeric_limits<double>::epsilon() * scale)
      throw DomainError("threshold energy: channel " + std::to_string(n + 1) +
                        " has zero momentum");
    ch.open[n] = E.real() > thresholds[n];
    ch.P[n] = ch.open[n] ? std::sqrt((E - thresholds[n]) / kinetic)
                         : I_unit * std::sqrt((thresholds[n] - E) / kinetic);
  }
  return ch;
}

inline ChannelContext make_channels(cplx E, const CouplingTables& t) {
  return make_channels(E, t.thresholds, t.kinetic);
}

// ---------------------------------------------------------------------------
// Regular solution

template <class Scalar>
using Mat3s = Eigen::Matrix<Scalar, 3, 3>;

template <class Scalar>
struct RegularState {
  Mat3s<Scalar> phi;
  Mat3s<Scalar> psi;  // d phi / dR
  /// log det of the accumulated column renormalizations: the unscaled
  /// solution equals (phi, psi) times a matrix with this log determinant.
  cplx log_scale{0.0, 0.0};
  double x = 0.0;  // R_inf - r_wall
  /// Regular solution at every visited node, expressed in the final column
  /// basis (filled only on request).
  std::vector<Mat3s<Scalar>> table;
};

namespace detail {

inline void free_flow(double p2, double h, double& c, double& s) {
  if (p2 > 0.0) {
    const double k = std::sqrt(p2);
    c = std::cos(k * h);
    s = std::sin(k * h) / k;
  } else if (p2 < 0.0) {
    const double k = std::sqrt(-p2);
    c = std::cosh(k * h);
    s = std::sinh(k * h) / k;
  } else {
    c = 1.0;
    s = h;
  }
}

inline void free_flow(cplx p2, double h, cplx& c, cplx& s) {
  const cplx k = std::sqrt(p2);
  if (std::abs(k * h) < 1e-6) {
    c = 1.0 - 0.5 * p2 * h * h;
    s = h * (1.0 - p2 * h * h / 6.0);
  } else {
    c = std::cos(k * h);
    s = std::sin(k * h) / k;
  }
}

inline cplx to_log(double v) { return v > 0.0 ? cplx(std::log(v), 0.0) : cplx(std::log(-v), std::numbers::pi); }
inline cplx to_log(cplx v) { return std::log(v); }

template <class Scalar>
Scalar channel_p2(const ChannelContext& ch, int n) {
  if constexpr (std::is_same_v<Scalar, double>) {
    return ch.p2(n).real();
  } else {
    return ch.p2(n);
  }
}

inline void check_strideable(const RadialGrid& g, int stride) {
  if (stride < 1) throw ValidationError("stride", "must be >= 1");
  for (const auto& s : g.segments())
    if (s.intervals % stride != 0)
      throw ValidationError("grid", "segment intervals not divisible by stride " +
                                        std::to_string(stride));
}

}  // namespace detail

/// Propagates the regular solution from the wall (Phi = 0, Phi' = I) to
/// R_inf, visiting every `stride`-th node of the table grid.
template <class Scalar>
RegularState<Scalar> solve_regular(const CouplingTables& t, const ChannelContext& ch,
                                   int stride = 1, bool keep_table = false,
                                   double renorm_threshold = 1e4) {
  if constexpr (std::is_same_v<Scalar, double>) {
    if (ch.E.imag() != 0.0) throw DomainError("solve_regular<double>: energy must be real");
  }
  using M = Mat3s<Scalar>;
  const auto& g = t.grid;
  detail::check_strideable(g, stride);
  std::array<Scalar, 3> p2;
  for (int n = 0; n < 3; ++n) p2[n] = detail::channel_p2<Scalar>(ch, n);

  RegularState<Scalar> st;
  st.phi.setZero();
  st.psi.setIdentity();
  st.x = g.r_infinity() - g.r_wall();

  std::vector<std::pair<std::size_t, M>> events;  // (first slot after, R)
  if (keep_table) st.table.reserve((g.size() - 1) / stride + 1);

  std::size_t k = 0;
  double h_prev = 0.0;
  std::array<Scalar, 3> c{}, s{};
  double h_cached = -1.0;
  auto kick = [&](double w) {
    if (w > 0.0) st.psi.noalias() += (w * t.W[k]).template cast<Scalar>() * st.phi;
    if (keep_table) st.table.push_back(st.phi);
  };
  auto renormalize = [&] {
    Eigen::Matrix<Scalar, 6, 3> stacked;
    stacked << st.phi, st.psi;
    Eigen::HouseholderQR<Eigen::Matrix<Scalar, 6, 3>> qr(stacked);
    const M r = qr.matrixQR().template topRows<3>().template triangularView<Eigen::Upper>();
    const Eigen::Matrix<Scalar, 6, 3> q =
        qr.householderQ() * Eigen::Matrix<Scalar, 6, 3>::Identity();
    st.phi = q.template topRows<3>();
    st.psi = q.template bottomRows<3>();
    for (int i = 0; i < 3; ++i) st.log_scale += detail::to_log(r(i, i));
    // Slots from table.size() on are stored in the new basis.
    if (keep_table) events.emplace_back(st.table.size(), r);
  };

  for (const auto& seg : g.segments()) {
    const double h = seg.step() * stride;
    const int steps = seg.intervals / stride;
    if (h != h_cached) {
      for (int n = 0; n < 3; ++n) detail::free_flow(p2[n], h, c[n], s[n]);
      h_cached = h;
    }
    for (int i = 0; i < steps; ++i) {
      kick(0.5 * (h_prev + h));
      for (int n = 0; n < 3; ++n) {
        const auto phi_row = st.phi.row(n).eval();
        st.phi.row(n) = c[n] * phi_row + s[n] * st.psi.row(n);
        st.psi.row(n) = (-p2[n] * s[n]) * phi_row + c[n] * st.psi.row(n);
      }
      k += stride;
      h_prev = h;
      const double mag = std::max(st.phi.cwiseAbs().maxCoeff(), st.psi.cwiseAbs().maxCoeff());
      if (!std::isfinite(mag))
        throw NumericalError("regular solution overflow at R = " + std::to_string(g[k]), g[k]);
      if (mag > renorm_threshold) renormalize();
    }
  }
  kick(0.5 * h_prev);

  if (keep_table && !events.empty()) {
    // Express every stored slot in the final basis: slots stored before an
    // event must be multiplied by R_e^-1 of each later event.
    M acc = M::Identity();
    std::size_t e = events.size();
    for (std::size_t slot = st.table.size(); slot-- > 0;) {
      while (e > 0 && events[e - 1].first > slot) {
        --e;
        acc = events[e].second.template triangularView<Eigen::Upper>().solve(acc);
      }
      st.table[slot] = st.table[slot] * acc;
    }
  }
  return st;
}

// ---------------------------------------------------------------------------
// Jost matrices

struct JostMatrices {
  /// F(P) with the factor exp(i P_n x) omitted from every closed row n.
  Mat3c f_plus;
  /// F(-P) on open rows; closed rows repeat f_plus (decaying branch kept).
  Mat3c f_minus;
  /// log det F(P) = log det f_plus + log_scale.
  cplx log_scale{0.0, 0.0};

  cplx log_det() const { return std::log(f_plus.determinant()) + log_scale; }
};

/// Wronskian form of F(P) = 1 + int exp(iPx) W Phi dx, evaluated from the
/// final (Phi, Phi') of the trapezoidal march; it equals the trapezoidal
/// quadrature of that integral on the same grid.
template <class Scalar>
JostMatrices jost_matrix(const ChannelContext& ch, const RegularState<Scalar>& st) {
  JostMatrices j;
  j.log_scale = st.log_scale;
  const Mat3c phi = st.phi.template cast<cplx>();
  const Mat3c psi = st.psi.template cast<cplx>();
  for (int n = 0; n < 3; ++n) {
    const cplx p = ch.P[n];
    const auto plus = (psi.row(n) - I_unit * p * phi.row(n)).eval();
    if (ch.open[n]) {
      j.f_plus.row(n) = std::exp(I_unit * p * st.x) * plus;
      j.f_minus.row(n) = std::exp(-I_unit * p * st.x) * (psi.row(n) + I_unit * p * phi.row(n));
    } else {
      j.f_plus.row(n) = plus;
      j.f_minus.row(n) = plus;
      j.log_scale += I_unit * p * st.x;
    }
  }
  return j;
}

/// Estimated phase error from truncating W at R_inf, for the open channels:
/// |W_oo(R_inf)| R_inf / (4 min P_open).
inline double tail_estimate(const CouplingTables& t, const ChannelContext& ch) {
  const auto& w = t.W.back();
  double wmax = 0.0, pmin = std::numeric_limits<double>::infinity();
  for (int i : ch.open_indices()) {
    pmin = std::min(pmin, std::abs(ch.P[i]));
    for (int j : ch.open_indices()) wmax = std::max(wmax, std::abs(w(i, j)));
  }
  if (!std::isfinite(pmin)) return 0.0;
  return wmax * t.grid.r_infinity() / (4.0 * pmin);
}

// ---------------------------------------------------------------------------
// S, K and cross sections

struct ScatteringMatrices {
  ChannelContext channels;
  JostMatrices jost;
  MatXc S;  // open block, flux normalized
  MatXc K;  // open block; real symmetric for real E up to roundoff
  /// Norm of the change made by grid extrapolation (0 without it).
  double extrapolation_change = 0.0;
};

/// S = P^-1/2 F(-P) F(P)^-1 P^1/2 on the open block (rows of F are channels) and
/// K = i (1 - S)(1 + S)^-1.
inline std::pair<MatXc, MatXc> s_and_k(const ChannelContext& ch, const JostMatrices& j) {
  const auto open = ch.open_indices();
  const int no = static_cast<int>(open.size());
  Eigen::PartialPivLU<Mat3c> lu(j.f_plus);
  if (!(lu.rcond() > 1e-14))
    throw NumericalError("Jost singularity (possible bound state at this E)", ch.E.real());
  // F(-P) F(P)^-1 restricted to open rows and columns.
  const Mat3c ratio = lu.solve(Mat3c::Identity());
  MatXc s(no, no);
  for (int a = 0; a < no; ++a)
    for (int b = 0; b < no; ++b) {
      const cplx v = j.f_minus.row(open[a]) * ratio.col(open[b]);
      s(a, b) = std::sqrt(ch.P[open[b]]) * v / std::sqrt(ch.P[open[a]]);
    }
  MatXc k(no, no);
  if (no > 0) {
    const MatXc id = MatXc::Identity(no, no);
    k = I_unit * (id + s).fullPivLu().solve(id - s);
  }
  return {s, k};
}

/// s-wave cross sections sigma_ij = pi/P_i^2 |delta_ij - S_ij|^2 [cm^2] on
/// the open block.
inline Eigen::MatrixXd cross_section(const ChannelContext& ch, const MatXc& s) {
  const auto open = ch.open_indices();
  const int no = static_cast<int>(open.size());
  if (s.rows() != no) throw ValidationError("S", "size does not match open channels");
  Eigen::MatrixXd sigma(no, no);
  for (int a = 0; a < no; ++a) {
    const double p = std::abs(ch.P[open[a]]);
    for (int b = 0; b < no; ++b) {
      const cplx d = (a == b ? 1.0 : 0.0) - s(a, b);
      sigma(a, b) = units::bohr2_to_cm2(std::numbers::pi / (p * p) * std::norm(d));
    }
  }
  return sigma;
}

/// sigma_ij for physical channel indices; i must be open.
inline double cross_section(const ChannelContext& ch, const MatXc& s, int i, int j) {
  if (i < 0 || i > 2 || j < 0 || j > 2) throw DomainError("cross_section: channel index");
  if (!ch.open[i] || !ch.open[j]) throw DomainError("cross_section: closed channel");
  const auto open = ch.open_indices();
  const int a = static_cast<int>(std::find(open.begin(), open.end(), i) - open.begin());
  const int b = static_cast<int>(std::find(open.begin(), open.end(), j) - open.begin());
  return cross_section(ch, s)(a, b);
}

// ---------------------------------------------------------------------------
// Grid extrapolation

/// Richardson extrapolation of values computed with steps h, 2h, 4h, ...
/// whose error expands in h^p0, h^(p0+2), ...
inline MatXc richardson(std::vector<MatXc> values, int p0) {
  int p = p0;
  while (values.size() > 1) {
    const double f = std::pow(2.0, p);
    std::vector<MatXc> next;
    for (std::size_t i = 0; i + 1 < values.size(); ++i)
      next.push_back((f * values[i] - values[i + 1]) / (f - 1.0));
    values = std::move(next);
    p += 2;
  }
  return values.front();
}

/// Largest stride 2^m (m <= levels) that divides every segment.
inline int extrapolation_levels(const RadialGrid& g, int levels) {
  int m = 0;
  while (m < levels) {
    const int stride = 1 << (m + 1);
    bool ok = true;
    for (const auto& s : g.segments()) ok = ok && (s.intervals % stride == 0);
    if (!ok) break;
    ++m;
  }
  return m;
}

struct ScatteringOptions {
  /// Number of Richardson levels (grids h, 2h, ..., 2^levels h).
  int richardson_levels = 2;
  /// Limit on tail_estimate [rad].
  double tail_tolerance = 1.0;
  double renorm_threshold = 1e4;
};

inline ScatteringMatrices solve_scattering(const CouplingTables& t, double E,
                                           const ScatteringOptions& opt = {}) {
  ScatteringMatrices out;
  out.channels = make_channels(E, t);
  const double tail = tail_estimate(t, out.channels);
  if (tail > opt.tail_tolerance)
    throw NumericalError("non-convergent tail at R_inf (phase error ~" + std::to_string(tail) +
                             " rad): increase r_infinity",
                         t.grid.r_infinity());
  const int levels = extrapolation_levels(t.grid, opt.richardson_levels);
  // S_ab = sqrt(P_b / P_a) N_ab / D with D = det F(P) and N_ab = det of F(P)
  // with row b replaced by row a of F(-P). Unlike S, these determinants are
  // smooth in the step even where a narrow resonance moves with it, so they
  // are what gets extrapolated.
  const auto open = out.channels.open_indices();
  const int no = static_cast<int>(open.size());
  std::vector<MatXc> dets;
  MatXc s0;
  cplx ref{0.0, 0.0};
  for (int m = 0; m <= levels; ++m) {
    auto st = solve_regular<double>(t, out.channels, 1 << m, false, opt.renorm_threshold);
    auto j = jost_matrix(out.channels, st);
    MatXc v(no * no + 1, 1);
    const cplx ld = std::log(j.f_plus.determinant()) + j.log_scale;
    if (m == 0) {
      auto sk = s_and_k(out.channels, j);
      s0 = std::move(sk.first);
      out.jost = j;
      ref = ld;
    }
    v(0, 0) = std::exp(ld - ref);
    for (int a = 0; a < no; ++a)
      for (int b = 0; b < no; ++b) {
        Mat3c mab = j.f_plus;
        mab.row(open[b]) = j.f_minus.row(open[a]);
        v(1 + a * no + b, 0) = std::exp(std::log(mab.determinant()) + j.log_scale - ref);
      }
    dets.push_back(std::move(v));
  }
  const MatXc d = richardson(dets, 2);
  out.S.resize(no, no);
  for (int a = 0; a < no; ++a)
    for (int b = 0; b < no; ++b)
      out.S(a, b) = std::sqrt(out.channels.P[open[b]] / out.channels.P[open[a]]) *
                    d(1 + a * no + b, 0) / d(0, 0);
  out.extrapolation_change = (out.S - s0).norm();
  if (no > 0) {
    const MatXc id = MatXc::Identity(no, no);
    out.K = I_unit * (id + out.S).fullPivLu().solve(id - out.S);
  }
  return out;
}

/// log det F(P) at complex E on the table grid with the given stride.
inline cplx log_det_jost(const CouplingTables& t, const ChannelContext& ch, int stride = 1,
                         double renorm_threshold = 1e4) {
  const bool real_e = ch.E.imag() == 0.0;
  return real_e ? jost_matrix(ch, solve_regular<double>(t, ch, stride, false, renorm_threshold))
                      .log_det()
                : jost_matrix(ch, solve_regular<cplx>(t, ch, stride, false, renorm_threshold))
                      .log_det();
}

// ---------------------------------------------------------------------------
// Log-derivative oracle

/// Open-block S from Johnson's log-derivative propagation of Y = Phi' Phi^-1
/// on every `stride`-th node. Each segment must hold an even number of steps.
inline MatXc log_derivative_S(const CouplingTables& t, const ChannelContext& ch, int stride = 1) {
  if (ch.E.imag() != 0.0) throw DomainError("log_derivative_S: energy must be real");
  const auto& g = t.grid;
  detail::check_strideable(g, 2 * stride);
  Vec3 p2;
  for (int n = 0; n < 3; ++n) p2[n] = ch.p2(n).real();

  Mat3 y = Mat3::Zero();
  bool started = false;
  std::size_t base = 0;
  for (const auto& seg : g.segments()) {
    const double h = seg.step() * stride;
    const int m = seg.intervals / stride;
    for (int i = 0; i <= m; ++i) {
      const std::size_t k = base + static_cast<std::size_t>(i) * stride;
      if (i > 0) {
        if (!started) {
          y = Mat3::Identity() / h;
          started = true;
        } else {
          y = y * (Mat3::Identity() + h * y).inverse();
        }
      }
      if (!started) continue;
      const Mat3 q = t.W[k] - Mat3(p2.asDiagonal());
      double w;
      Mat3 u;
      if (i == 0 || i == m) {
        w = 1.0;
        u = q;
      } else if (i % 2 == 1) {
        w = 4.0;
        u = (Mat3::Identity() - (h * h / 6.0) * q).inverse() * q;
      } else {
        w = 2.0;
        u = q;
      }
      y += (h / 3.0 * w) * u;
    }
    base += static_cast<std::size_t>(seg.intervals);
  }

  // Match Phi = J E_o + N B, with J = sin(Px), N = cos(Px) on open rows and
  // N = decaying exponential (scaled to 1) on closed rows.
  const double x = g.r_infinity() - g.r_wall();
  const auto open = ch.open_indices();
  const int no = static_cast<int>(open.size());
  Mat3 jm = Mat3::Zero(), jd = Mat3::Zero(), nm = Mat3::Zero(), nd = Mat3::Zero();
  for (int n = 0; n < 3; ++n) {
    if (ch.open[n]) {
      const double p = ch.P[n].real();
      jm(n, n) = std::sin(p * x);
      jd(n, n) = p * std::cos(p * x);
      nm(n, n) = std::cos(p * x);
      nd(n, n) = -p * std::sin(p * x);
    } else {
      nm(n, n) = 1.0;
      nd(n, n) = -ch.P[n].imag();
    }
  }
  Eigen::MatrixXd eo = Eigen::MatrixXd::Zero(3, no);
  for (int a = 0; a < no; ++a) eo(open[a], a) = 1.0;
  const Eigen::MatrixXd b = (y * nm - nd).fullPivLu().solve((jd - y * jm) * eo);
  MatXc k(no, no);
  for (int a = 0; a < no; ++a)
    for (int c = 0; c < no; ++c)
      k(a, c) = std::sqrt(ch.P[open[a]].real()) * b(open[a], c) / std::sqrt(ch.P[open[c]].real());
  const MatXc id = MatXc::Identity(no, no);
  return (id + I_unit * k) * (id - I_unit * k).inverse();
}

/// Log-derivative S extrapolated over grids h, 2h, ... (error in h^4, h^6, ...).
inline MatXc log_derivative_S_extrapolated(const CouplingTables& t, double E, int levels = 1) {
  const auto ch = make_channels(E, t);
  const int usable = std::max(0, extrapolation_levels(t.grid, levels + 1) - 1);
  std::vector<MatXc> ss;
  for (int m = 0; m <= usable; ++m) ss.push_back(log_derivative_S(t, ch, 1 << m));
  return richardson(ss, 4);
}

// ---------------------------------------------------------------------------
// Energy scans

struct ScatterPoint {
  double E;          // [rad/s] relative to omega_A
  double P1;         // channel-1 momentum [a0^-1]
  double sigma11;    // [cm^2]
  cplx S11;
};

inline ScatterPoint scatter_point(const CouplingTables& t, double E,
                                  const ScatteringOptions& opt = {}) {
  if (!(E > t.thresholds[0]))
    throw DomainError("scatter: energy below the lowest threshold (channel 1 closed)");
  const auto m = solve_scattering(t, E, opt);
  return {E, m.channels.P[0].real(), cross_section(m.channels, m.S)(0, 0), m.S(0, 0)};
}

inline std::vector<ScatterPoint> scan_energies(const CouplingTables& t,
                                               const std::vector<double>& energies,
                                               const ScatteringOptions& opt = {},
                                               unsigned threads = default_threads()) {
  for (double e : energies)
    if (!(e > t.thresholds[0]))
      throw ValidationError("energy", "scan must stay above the lowest threshold");
  std::vector<ScatterPoint> out(energies.size());
  parallel_for(energies.size(), threads,
               [&](std::size_t i) { out[i] = scatter_point(t, energies[i], opt); });
  return out;
}

inline std::vector<double> linspace(double a, double b, int n) {
  if (n < 1) throw ValidationError("points", "must be >= 1");
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
  return v;
}

// ---------------------------------------------------------------------------
// Cavity loss

/// Convolution with a unit-area Lorentzian of FWHM gamma_c on a uniform energy
/// grid. Each sample stands for its bin; values beyond the ends are held at
/// the edge values, so constants are preserved exactly.
inline std::vector<double> lossy_convolve(const std::vector<double>& energies,
                                          const std::vector<double>& values, double gamma_c) {
  if (gamma_c < 0.0) throw DomainError("lossy_convolve: gamma_c must be >= 0");
  if (energies.size() != values.size()) throw ValidationError("sigma", "length mismatch");
  const std::size_t n = energies.size();
  if (gamma_c == 0.0 || n < 2) return values;
  const double de = (energies.back() - energies.front()) / (n - 1);
  for (std::size_t i = 1; i < n; ++i)
    if (std::abs(energies[i] - energies[i - 1] - de) > 1e-6 * std::abs(de))
      throw ValidationError("energy", "lossy_convolve needs a uniform grid");
  const double half = 0.5 * gamma_c;
  auto cdf = [&](double e) { return std::atan(e / half) / std::numbers::pi + 0.5; };
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double e0 = energies[i];
    double acc = values.front() * cdf(energies.front() - 0.5 * de - e0);
    acc += values.back() * (1.0 - cdf(energies.back() + 0.5 * de - e0));
    for (std::size_t j = 0; j < n; ++j) {
      const double lo = energies[j] - 0.5 * de - e0, hi = energies[j] + 0.5 * de - e0;
      acc += values[j] * (cdf(hi) - cdf(lo));
    }
    out[i] = acc;
  }
  return out;
}

/// Convolution with a unit-area Lorentzian of FWHM gamma_c for values given
/// on sorted, possibly nonuniform energies and taken as piecewise linear
/// between them (held constant beyond the ends). The integral over each
/// segment is exact. Evaluated at `targets`.
inline std::vector<double> lossy_convolve_linear(const std::vector<double>& energies,
                                                 const std::vector<double>& values,
                                                 double gamma_c,
                                                 const std::vector<double>& targets) {
  if (!(gamma_c > 0.0)) throw DomainError("lossy_convolve_linear: gamma_c must be > 0");
  if (energies.size() != values.size()) throw ValidationError("sigma", "length mismatch");
  if (energies.size() < 2) throw ValidationError("energy", "need at least two points");
  for (std::size_t i = 1; i < energies.size(); ++i)
    if (!(energies[i] > energies[i - 1])) throw ValidationError("energy", "must be increasing");
  const double h = 0.5 * gamma_c;
  const double inv_pi = 1.0 / std::numbers::pi;
  std::vector<double> out(targets.size());
  for (std::size_t q = 0; q < targets.size(); ++q) {
    const double e0 = targets[q];
    // F0 = int L, F1 = int (x - e0) L, in u = x - e0.
    auto f0 = [&](double u) { return std::atan(u / h) * inv_pi; };
    auto f1 = [&](double u) { return 0.5 * h * inv_pi * std::log(u * u + h * h); };
    double acc = values.front() * (f0(energies.front() - e0) + 0.5);
    acc += values.back() * (0.5 - f0(energies.back() - e0));
    double a0 = f0(energies.front() - e0), b0 = f1(energies.front() - e0);
    for (std::size_t j = 0; j + 1 < energies.size(); ++j) {
      const double ul = energies[j] - e0, ur = energies[j + 1] - e0;
      const double a1 = f0(ur), b1 = f1(ur);
      const double slope = (values[j + 1] - values[j]) / (ur - ul);
      // y(u) = values[j] + slope (u - ul)
      acc += (values[j] - slope * ul) * (a1 - a0) + slope * (b1 - b0);
      a0 = a1;
      b0 = b1;
    }
    out[q] = acc;
  }
  return out;
}

}  // namespace cavmol
