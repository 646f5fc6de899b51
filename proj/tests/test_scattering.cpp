// Channel momenta, Jost matrices, S and K, cross sections and cavity loss.

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "cavmol/checks.hpp"
#include "cavmol/scattering.hpp"
#include "oracles.hpp"

using namespace cavmol;

namespace {

// Two open channels (thresholds 0 and 2) coupled by a Gaussian; a third
// channel is closed and decoupled.
CouplingTables two_channel_model(int n = 8001) {
  return CouplingTables::from_function(
      RadialGrid::uniform(1e-3, 20.0, n),
      [](double r) {
        const double g = std::exp(-0.5 * r * r);
        Mat3 m = Mat3::Zero();
        m(0, 0) = -6.0 * g;
        m(1, 1) = -3.0 * g;
        m(0, 1) = m(1, 0) = 1.5 * g;
        return m;
      },
      Vec3(0.0, 2.0, 100.0), 1.0);
}

CouplingTables square_well(double v0, double a, int n) {
  // Wall at 1, so the well spans [1, 1 + a]; the discontinuity sits on a node
  // and takes the mean value there.
  const double edge = 1.0 + a;
  return oracle::single_channel(RadialGrid::uniform(1.0, 11.0, n), [=](double r) {
    if (std::abs(r - edge) < 1e-9) return -0.5 * v0;
    return r < edge ? -v0 : 0.0;
  });
}

}  // namespace

// ---------------------------------------------------------------------------
// Momenta

TEST(Momenta, AllRealAboveEveryThreshold) {
  const auto ch = make_channels(cplx(10.0, 0.0), Vec3(0.0, 1.0, 4.0), 2.0);
  for (int n = 0; n < 3; ++n) {
    EXPECT_TRUE(ch.open[n]);
    EXPECT_EQ(ch.P[n].imag(), 0.0);
    EXPECT_GT(ch.P[n].real(), 0.0);
  }
  EXPECT_NEAR(ch.P[2].real(), std::sqrt(3.0), 1e-15);
}

TEST(Momenta, ClosedChannelsDecay) {
  const auto ch = make_channels(cplx(2.0, 0.0), Vec3(0.0, 3.0, 6.0), 1.0);
  EXPECT_TRUE(ch.open[0]);
  EXPECT_FALSE(ch.open[1]);
  EXPECT_NEAR(ch.P[1].imag(), 1.0, 1e-15);
  EXPECT_NEAR(ch.P[2].imag(), 2.0, 1e-15);
  EXPECT_EQ(ch.open_indices(), std::vector<int>{0});
}

TEST(Momenta, ComplexEnergyBranches) {
  // Open channel: principal root, continuous from the real axis.
  const auto ch = make_channels(cplx(4.0, -0.1), Vec3(0.0, 9.0, 16.0), 1.0);
  EXPECT_GT(ch.P[0].real(), 0.0);
  EXPECT_LT(ch.P[0].imag(), 0.0);
  EXPECT_NEAR(std::norm(ch.P[0] * ch.P[0] - cplx(4.0, -0.1)), 0.0, 1e-24);
  for (int n = 1; n < 3; ++n) {
    EXPECT_GT(ch.P[n].imag(), 0.0);
    EXPECT_NEAR(std::abs(ch.P[n] * ch.P[n] - (cplx(4.0, -0.1) - ch.thresholds[n])), 0.0, 1e-12);
  }
}

TEST(Momenta, ExactThresholdIsDomainError) {
  EXPECT_THROW(make_channels(cplx(3.0, 0.0), Vec3(0.0, 3.0, 6.0), 1.0), DomainError);
}

// ---------------------------------------------------------------------------
// Free motion and model problems

TEST(Jost, NoInteractionGivesIdentity) {
  const auto t = CouplingTables::from_function(
      RadialGrid::uniform(1.0, 50.0, 2001), [](double) { return Mat3::Zero(); },
      Vec3(0.0, 3.0, 5.0), 1.0);
  for (double e : {1.0, 4.0, 9.0}) {
    const auto m = solve_scattering(t, e);
    const auto no = m.S.rows();
    EXPECT_LT((m.S - MatXc::Identity(no, no)).cwiseAbs().maxCoeff(), 1e-13) << e;
    EXPECT_LT(m.K.cwiseAbs().maxCoeff(), 1e-13);
    // det F = 1; the log is defined up to 2 pi i.
    EXPECT_LT(std::abs(std::exp(m.jost.log_det()) - 1.0), 1e-12);
    const auto ch = make_channels(cplx(e, 0.0), t);
    EXPECT_LT(std::abs(std::exp(log_det_jost(t, ch)) - 1.0), 1e-12);
    EXPECT_LT(cross_section(m.channels, m.S).cwiseAbs().maxCoeff(), 1e-40);
  }
}

TEST(Jost, SquareWellPhaseShift) {
  const double v0 = 3.0, a = 2.0;
  const auto t = square_well(v0, a, 20001);
  for (double k : {0.3, 0.8, 1.5, 2.5}) {
    const auto m = solve_scattering(t, k * k);
    const cplx expected = std::exp(2.0 * I_unit * oracle::square_well_phase(k, v0, a));
    EXPECT_LT(std::abs(m.S(0, 0) - expected), 1e-8) << "k = " << k;
  }
}

TEST(Jost, RepulsiveSquareBarrierPhaseShift) {
  const double v0 = -4.0, a = 1.5;
  const auto t = square_well(v0, a, 20001);
  for (double k : {0.5, 1.2, 3.0}) {
    const auto m = solve_scattering(t, k * k);
    const cplx expected = std::exp(2.0 * I_unit * oracle::square_well_phase(k, v0, a));
    EXPECT_LT(std::abs(m.S(0, 0) - expected), 1e-8) << "k = " << k;
  }
}

TEST(Jost, ExtrapolationConvergesWithGrid) {
  const auto coarse = two_channel_model(2001), fine = two_channel_model(8001);
  const auto a = solve_scattering(coarse, 5.0), b = solve_scattering(fine, 5.0);
  EXPECT_LT((a.S - b.S).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_GT(a.extrapolation_change, 0.0);
}

TEST(Jost, RichardsonCancelsEvenPowers) {
  std::vector<MatXc> v;
  for (double h : {0.1, 0.2, 0.4}) v.push_back(MatXc::Constant(1, 1, 1.0 + h * h + h * h * h * h));
  EXPECT_NEAR(std::abs(richardson(v, 2)(0, 0) - 1.0), 0.0, 1e-14);
}

// ---------------------------------------------------------------------------
// Invariants of S and K

TEST(SMatrix, UnitarySymmetricAndRealK) {
  const auto t = two_channel_model();
  for (double e : {2.5, 4.0, 7.0, 12.0}) {
    const auto m = solve_scattering(t, e);
    ASSERT_EQ(m.S.rows(), 2);
    EXPECT_LT((m.S.adjoint() * m.S - MatXc::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((m.S - m.S.transpose()).cwiseAbs().maxCoeff(), 1e-10);
    const double ks = std::max(1.0, m.K.cwiseAbs().maxCoeff());
    EXPECT_LT(m.K.imag().cwiseAbs().maxCoeff() / ks, 1e-9);
    EXPECT_LT((m.K - m.K.transpose()).cwiseAbs().maxCoeff() / ks, 1e-9);
    EXPECT_GT(std::abs(m.S(0, 1)), 1e-3);  // channels do couple
  }
}

TEST(SMatrix, AgreesWithLogDerivativePropagation) {
  const auto t = two_channel_model();
  for (double e : {2.5, 6.0}) {
    const auto m = solve_scattering(t, e);
    const MatXc ld = log_derivative_S_extrapolated(t, e, 2);
    EXPECT_LT((m.S - ld).cwiseAbs().maxCoeff(), 1e-7) << e;
  }
}

TEST(SMatrix, PresetInvariants) {
  for (const auto& cfg : {presets::cs_optical(), presets::cs_rydberg()}) {
    const auto curves = diagonalize_curves(cfg.params, RadialGrid::from_spec(cfg.grid));
    const auto t = build_couplings(curves);
    const double lo = characterize_well(curves)->min_value;
    const double hi = t.thresholds[1];
    std::vector<double> es;
    for (int i = 1; i <= 12; ++i) es.push_back(lo + (hi - lo) * i / 13.0);
    const auto v = scattering_checks(t, es);
    EXPECT_LT(v.unitarity, 1e-6) << cfg.preset;
    EXPECT_LT(v.k_symmetry, 1e-6);
    EXPECT_LT(v.k_imaginary, 1e-6);
    EXPECT_LE(v.unitarity_bound, 1e-6);
  }
}

TEST(SMatrix, NonConvergentTailRejected) {
  const auto t = oracle::single_channel(RadialGrid::uniform(1.0, 10.0, 101),
                                        [](double r) { return -50.0 / r; });
  EXPECT_THROW(solve_scattering(t, 0.01), NumericalError);
}

// ---------------------------------------------------------------------------
// Cross sections

TEST(CrossSection, LimitsOfS) {
  const auto ch = make_channels(cplx(0.25, 0.0), Vec3(0.0, 1.0, 2.0), 1.0);
  const double p = 0.5;
  MatXc s = MatXc::Identity(1, 1);
  EXPECT_EQ(cross_section(ch, s)(0, 0), 0.0);
  s(0, 0) = -1.0;
  const double a0_cm = 5.29177210903e-9;
  EXPECT_NEAR(cross_section(ch, s)(0, 0) / (4.0 * std::numbers::pi / (p * p) * a0_cm * a0_cm),
              1.0, 1e-14);
  EXPECT_THROW(cross_section(ch, s, 1, 1), DomainError);
  EXPECT_THROW(cross_section(ch, MatXc::Identity(2, 2)), ValidationError);
}

TEST(CrossSection, BelowLowestThresholdRejected) {
  const auto t = two_channel_model(401);
  EXPECT_THROW(scatter_point(t, -1.0), DomainError);
  EXPECT_THROW(scan_energies(t, {1.0, -1.0}), ValidationError);
}

TEST(CrossSection, ScanIsThreadCountIndependent) {
  const auto t = two_channel_model(2001);
  const auto es = linspace(0.1, 1.9, 37);
  const auto a = scan_energies(t, es, {}, 1), b = scan_energies(t, es, {}, 4);
  for (std::size_t i = 0; i < es.size(); ++i) {
    EXPECT_EQ(a[i].sigma11, b[i].sigma11);
    EXPECT_EQ(a[i].S11, b[i].S11);
  }
}

// ---------------------------------------------------------------------------
// Cavity loss

TEST(Loss, ZeroWidthIsIdentity) {
  const auto e = linspace(0.0, 1.0, 11);
  std::vector<double> y;
  for (double x : e) y.push_back(std::sin(5.0 * x));
  EXPECT_EQ(lossy_convolve(e, y, 0.0), y);
  EXPECT_THROW(lossy_convolve(e, y, -1.0), DomainError);
  EXPECT_THROW(lossy_convolve_linear(e, y, 0.0, e), DomainError);
}

TEST(Loss, ConstantsPreserved) {
  const auto e = linspace(-3.0, 3.0, 61);
  const std::vector<double> y(e.size(), 2.5);
  for (double v : lossy_convolve(e, y, 0.7)) EXPECT_NEAR(v, 2.5, 1e-13);
  for (double v : lossy_convolve_linear(e, y, 0.7, linspace(-10.0, 10.0, 41)))
    EXPECT_NEAR(v, 2.5, 1e-13);
}

TEST(Loss, LorentzianWidthsAdd) {
  // Lorentzian (FWHM g) * unit-area Lorentzian (FWHM G) = Lorentzian of FWHM
  // g + G with peak height g / (g + G).
  const double g = 0.2, big = 0.5;
  const auto e = linspace(-400.0, 400.0, 400001);
  std::vector<double> y;
  for (double x : e) y.push_back(oracle::lorentzian(x, 0.0, g));
  const auto targets = linspace(-2.0, 2.0, 41);
  const auto out = lossy_convolve_linear(e, y, big, targets);
  for (std::size_t i = 0; i < targets.size(); ++i)
    EXPECT_NEAR(out[i], g / (g + big) * oracle::lorentzian(targets[i], 0.0, g + big), 1e-5);
  // The binned uniform-grid variant agrees to its own (second-order) accuracy.
  const auto ue = linspace(-40.0, 40.0, 8001);
  std::vector<double> uy;
  for (double x : ue) uy.push_back(oracle::lorentzian(x, 0.0, g));
  const auto binned = lossy_convolve(ue, uy, big);
  EXPECT_NEAR(binned[4000], g / (g + big), 1e-4);
}

TEST(Loss, InputValidation) {
  EXPECT_THROW(lossy_convolve_linear({0.0, 0.0}, {1.0, 1.0}, 1.0, {0.0}), ValidationError);
  EXPECT_THROW(lossy_convolve_linear({0.0, 1.0}, {1.0}, 1.0, {0.0}), ValidationError);
  EXPECT_THROW(lossy_convolve({0.0, 1.0, 3.0}, {1.0, 1.0, 1.0}, 1.0), ValidationError);
}
