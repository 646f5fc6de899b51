// Franck-Condon ingredients and the angle-averaged emission spectrum.

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "cavmol/spectrum.hpp"

using namespace cavmol;

namespace {

double j1_series(double x) {
  const double x2 = x * x;
  return x / 3.0 - x * x2 / 30.0 + x * x2 * x2 / 840.0 - x * x2 * x2 * x2 / 45360.0;
}

SpectrumOptions small_options() {
  SpectrumOptions o;
  o.n_theta = 9;
  o.n_radial = 4001;
  o.points = 401;
  return o;
}

}  // namespace

TEST(Spectrum, SphericalBesselJ1) {
  for (double x : {1e-6, 5e-4, 2e-3, 0.05, 0.099}) EXPECT_NEAR(spherical_j1(x) / j1_series(x), 1.0, 1e-12) << x;
  EXPECT_NEAR(spherical_j1(0.1) / j1_series(0.1), 1.0, 1e-12);
  EXPECT_NEAR(spherical_j1(5.0), (std::sin(5.0) / 5.0 - std::cos(5.0)) / 5.0, 1e-15);
  EXPECT_NEAR(spherical_j1(-0.3), -spherical_j1(0.3), 1e-16);
}

TEST(Spectrum, RecoilEnergyByHand) {
  // hbar k^2 / (2 m_Cs) for the 852 nm line, in rad/s.
  const double hbar = 1.054571817e-34, c = 299792458.0;
  const double m = 132.905451961 * 1.66053906660e-27;
  const double k = 2.0 * std::numbers::pi * 3.5172e14 / c;
  const auto p = presets::cs_optical().params;
  EXPECT_NEAR(recoil_energy(p) / (hbar * k * k / (2.0 * m)), 1.0, 1e-12);
  // About 2 kHz for cesium.
  EXPECT_NEAR(units::to_khz(recoil_energy(p)), 2.07, 0.02);
}

TEST(Spectrum, CollisionWavenumber) {
  const auto p = presets::cs_optical().params;
  const double e = units::from_khz(3.0);
  EXPECT_NEAR(collision_wavenumber(p, e), std::sqrt(e / kinetic_constant(p)), 1e-20);
  EXPECT_THROW(collision_wavenumber(p, 0.0), DomainError);
}

TEST(Spectrum, GroundFunctionIsPWave) {
  const std::vector<double> r{1e-3, 10.0, 1e4};
  const auto g = ground_wavefunction(1e-3, r);
  // k R j1(k R) ~ (k R)^2 / 3 near the origin.
  EXPECT_NEAR(g[0] / (1e-12 / 3.0), 1.0, 1e-9);
  EXPECT_NEAR(g[2], 10.0 * spherical_j1(10.0), 1e-15);
}

TEST(Spectrum, ZeroAdmixtureGivesZeroAmplitude) {
  const auto m = make_morse(1e8, 2000.0, 1e-3, 1.7e11);
  std::vector<double> r;
  for (int i = 0; i < 2001; ++i) r.push_back(500.0 + i * 3.0);
  const std::vector<double> zero(r.size(), 0.0), one(r.size(), 1.0);
  EXPECT_EQ(franck_condon_amplitude(m, 0, r, zero, one), 0.0);
  EXPECT_NE(franck_condon_amplitude(m, 0, r, one, one), 0.0);
}

TEST(Spectrum, SymmetricAdmixtureOfDarkAsymptote) {
  // Far out, omega_2 is the dark combination kappa_B|A> - kappa_A|B>.
  const auto p = presets::cs_optical().params;
  const auto c = diagonalize_curves(p, RadialGrid::uniform(1e6, 1e7, 3));
  const double n = std::hypot(p.kappa_A, p.kappa_B);
  const double expected = std::abs(p.kappa_B - p.kappa_A) / n / std::numbers::sqrt2;
  EXPECT_NEAR(std::abs(symmetric_admixture(c).back()), expected, 1e-6);
}

TEST(Spectrum, IntensityIsSumOfLorentzianLines) {
  const auto cfg = presets::cs_optical();
  const auto opt = small_options();
  const auto s = emission_spectrum(cfg, Symmetry::sigma, opt, 2);
  ASSERT_FALSE(s.empty);
  ASSERT_FALSE(s.lines.empty());
  std::vector<double> rebuilt(s.omega.size(), 0.0);
  for (const auto& l : s.lines) {
    EXPECT_LT(l.center, s.threshold);
    EXPECT_GT(l.center, s.threshold - s.depth);
    EXPECT_GT(l.theta, 0.0);
    EXPECT_LT(l.theta, std::numbers::pi);
    for (std::size_t j = 0; j < s.omega.size(); ++j) {
      const double d = s.omega[j] - l.center, g = opt.gamma_eff;
      rebuilt[j] += l.weight * g * g / (d * d + g * g);
    }
  }
  const double peak = *std::max_element(rebuilt.begin(), rebuilt.end());
  for (std::size_t j = 0; j < s.omega.size(); ++j)
    EXPECT_NEAR(s.intensity[j], rebuilt[j] / peak, 1e-12);
  EXPECT_DOUBLE_EQ(*std::max_element(s.intensity.begin(), s.intensity.end()), 1.0);
}

TEST(Spectrum, OrientationWeights) {
  const auto cfg = presets::cs_optical();
  const auto both = emission_spectra(cfg, {Symmetry::sigma, Symmetry::pi}, small_options(), 2);
  ASSERT_EQ(both.size(), 2u);
  // Pi coupling |cos theta| vanishes at pi/2, where the Pi weight does too.
  for (const auto& l : both[1].lines) EXPECT_GT(std::abs(l.theta - 0.5 * std::numbers::pi), 1e-9);
  EXPECT_NE(both[0].intensity, both[1].intensity);
  EXPECT_EQ(both[0].threshold, both[1].threshold);
}

TEST(Spectrum, ThreadCountIndependent) {
  const auto cfg = presets::cs_optical();
  const auto a = emission_spectrum(cfg, Symmetry::pi, small_options(), 1);
  const auto b = emission_spectrum(cfg, Symmetry::pi, small_options(), 4);
  EXPECT_EQ(a.intensity, b.intensity);
}

TEST(Spectrum, InvalidOptionsRejected) {
  const auto cfg = presets::cs_optical();
  auto o = small_options();
  o.gamma_eff = 0.0;
  EXPECT_THROW(emission_spectrum(cfg, Symmetry::sigma, o), ValidationError);
  o = small_options();
  o.n_theta = 4;
  EXPECT_THROW(emission_spectrum(cfg, Symmetry::sigma, o), ValidationError);
}

TEST(Spectrum, NoCouplingGivesEmptySpectrum) {
  auto cfg = presets::cs_optical();
  cfg.params.kappa_A = cfg.params.kappa_B = 0.0;
  const auto s = emission_spectrum(cfg, Symmetry::sigma, small_options(), 1);
  EXPECT_TRUE(s.empty);
  EXPECT_TRUE(s.lines.empty());
  for (double v : s.intensity) EXPECT_EQ(v, 0.0);
}
