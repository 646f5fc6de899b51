// Peak detection, Lorentzian fits, adaptive scans and complex pole search.

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "cavmol/resonance.hpp"
#include "oracles.hpp"

using namespace cavmol;

namespace {

std::vector<double> sample(const std::vector<double>& x, const std::function<double(double)>& f) {
  std::vector<double> y;
  for (double v : x) y.push_back(f(v));
  return y;
}

// Barrier model with one narrow s-wave resonance near E = 8.93.
const CouplingTables& shape_model() {
  static const auto t = oracle::single_channel(
      RadialGrid::uniform(1e-3, 30.0, 20001), [](double r) { return oracle::shape_well(r, 22.0); });
  return t;
}

}  // namespace

// ---------------------------------------------------------------------------
// Peaks and fits

TEST(Peaks, FlatSignalHasNone) {
  const auto e = linspace(0.0, 1.0, 500);
  const std::vector<double> y(e.size(), 3.0);
  EXPECT_TRUE(find_peaks(y, 1e-6).empty());
  EXPECT_TRUE(scan_and_fit(e, y).empty());
}

TEST(Peaks, ProminenceAndBases) {
  const std::vector<double> y{0, 1, 0.5, 3, 0.2, 0.1, 0.4, 0.1};
  const auto p = find_peaks(y, 0.25);
  ASSERT_EQ(p.size(), 3u);
  EXPECT_EQ(p[1].index, 3u);
  // Height above the higher of the two bases.
  EXPECT_DOUBLE_EQ(p[0].prominence, 0.5);
  EXPECT_DOUBLE_EQ(p[1].prominence, 2.9);
  EXPECT_NEAR(p[2].prominence, 0.3, 1e-15);
  EXPECT_EQ(find_peaks(y, 0.45).size(), 2u);
}

TEST(Fit, RecoversLorentzianOnSlopedBackground) {
  const double e0 = 2.31, g = 0.013, a = 5.0;
  const auto e = linspace(2.0, 2.6, 3001);
  const auto y = sample(e, [&](double x) { return a * oracle::lorentzian(x, e0, g) + 0.4 + 0.2 * x; });
  const auto fits = scan_and_fit(e, y);
  ASSERT_EQ(fits.size(), 1u);
  EXPECT_EQ(fits[0].kind, ResonanceKind::peak_fit);
  EXPECT_NEAR(fits[0].e_r, e0, 0.01 * g);
  EXPECT_NEAR(fits[0].gamma_r / g, 1.0, 0.01);
  EXPECT_NEAR(fits[0].amplitude / a, 1.0, 0.01);
}

TEST(Fit, SeparatedPeaksAreFittedIndependently) {
  const auto e = linspace(0.0, 10.0, 20001);
  const auto y = sample(e, [](double x) {
    return 2.0 * oracle::lorentzian(x, 3.0, 0.05) + oracle::lorentzian(x, 7.0, 0.2) + 0.1;
  });
  const auto fits = scan_and_fit(e, y);
  ASSERT_EQ(fits.size(), 2u);
  EXPECT_NEAR(fits[0].gamma_r, 0.05, 5e-4);
  EXPECT_NEAR(fits[1].gamma_r, 0.2, 2e-3);
  EXPECT_NEAR(fits[1].e_r, 7.0, 1e-3);
}

TEST(Fit, DispersiveTermCapturesSmoothedFanoShape) {
  const double e0 = 1.0, g = 0.1;
  const auto e = linspace(0.5, 1.5, 2001);
  auto disp = [&](double x) {
    const double d = x - e0, h = 0.5 * g;
    return h * d / (d * d + h * h);
  };
  const auto y = sample(e, [&](double x) {
    return 3.0 * oracle::lorentzian(x, e0, g) + 1.5 * disp(x) + 1.0 - 0.3 * (x - 1.0);
  });
  LorentzianFitOptions opt;
  opt.dispersive = true;
  const auto f = fit_lorentzian(e, y, 1.02, 0.08, 3.0, 0.7, 1.3, opt);
  ASSERT_TRUE(f.has_value());
  EXPECT_NEAR(f->e_r, e0, 1e-6);
  EXPECT_NEAR(f->gamma_r / g, 1.0, 1e-6);
  EXPECT_NEAR(f->amplitude, 3.0, 1e-5);
  // A plain Lorentzian misplaces the same curve.
  const auto plain = fit_lorentzian(e, y, 1.02, 0.08, 3.0, 0.7, 1.3);
  ASSERT_TRUE(plain.has_value());
  EXPECT_GT(std::abs(plain->e_r - e0), 0.05 * g);
}

TEST(Fit, RejectsBadOptions) {
  const auto e = linspace(0.0, 1.0, 50);
  const auto y = sample(e, [](double x) { return oracle::lorentzian(x, 0.5, 0.1); });
  LorentzianFitOptions opt;
  opt.background_degree = 5;
  EXPECT_THROW(fit_lorentzian(e, y, 0.5, 0.1, 1.0, 0.0, 1.0, opt), ValidationError);
  EXPECT_FALSE(fit_lorentzian(e, y, 0.5, 0.1, 1.0, 0.49, 0.5).has_value());
  EXPECT_THROW(scan_and_fit(e, std::vector<double>(3, 0.0)), ValidationError);
}

TEST(Fit, DefaultProminenceIgnoresSmoothBackground) {
  // A background varying 50-fold must not hide a small sharp peak.
  const auto e = linspace(0.0, 1.0, 4001);
  const auto y = sample(e, [](double x) {
    return 50.0 * std::exp(-4.0 * x) + 0.5 * oracle::lorentzian(x, 0.6, 0.004);
  });
  const auto fits = scan_and_fit(e, y);
  ASSERT_EQ(fits.size(), 1u);
  EXPECT_NEAR(fits[0].e_r, 0.6, 1e-4);
}

// ---------------------------------------------------------------------------
// Scans and poles

TEST(Scan, AdaptiveRefinesAroundNarrowResonance) {
  const auto& t = shape_model();
  AdaptiveScanOptions ao;
  ao.coarse_points = 201;
  const auto pts = adaptive_scan(t, 8.0, 10.0, ao, {}, 2);
  EXPECT_GT(pts.size(), 201u);
  for (std::size_t i = 1; i < pts.size(); ++i) EXPECT_GT(pts[i].E, pts[i - 1].E);
  int near = 0;
  for (const auto& p : pts) near += std::abs(p.E - 8.9325) < 0.01;
  EXPECT_GE(near, 10);
}

TEST(Pole, MatchesPhaseDerivative) {
  // Near an isolated resonance d delta / dE peaks at 2 / Gamma.
  const auto& t = shape_model();
  Resonance seed;
  seed.e_r = 8.93;
  seed.gamma_r = 0.005;
  const auto pole = refine_pole(t, seed);
  ASSERT_EQ(pole.kind, ResonanceKind::complex_pole);
  ASSERT_TRUE(pole.pole.has_value());
  EXPECT_NEAR(pole.pole->imag(), -0.5 * pole.gamma_r, 1e-15);

  const auto es = linspace(pole.e_r - 0.02, pole.e_r + 0.02, 801);
  const auto pts = scan_energies(t, es, {}, 2);
  double best = 0.0, at = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    double d = std::arg(pts[i].S11 / pts[i - 1].S11) / 2.0;
    const double slope = d / (es[i] - es[i - 1]);
    if (slope > best) best = slope, at = 0.5 * (es[i] + es[i - 1]);
  }
  EXPECT_NEAR(2.0 / best / pole.gamma_r, 1.0, 0.05);
  EXPECT_NEAR(at, pole.e_r, 0.1 * pole.gamma_r);
}

TEST(Pole, SeedFarFromAnyPoleIsUnconverged) {
  Resonance seed;
  seed.e_r = 1.0;
  seed.gamma_r = 1e-3;
  const auto r = refine_pole(shape_model(), seed);
  EXPECT_EQ(r.kind, ResonanceKind::unconverged);
  EXPECT_FALSE(r.pole.has_value());
}

TEST(Pole, FreeMotionHasNoPole) {
  const auto t = CouplingTables::from_function(
      RadialGrid::uniform(1.0, 20.0, 401), [](double) { return Mat3::Zero(); },
      Vec3(0.0, 5.0, 9.0), 1.0);
  Resonance seed;
  seed.e_r = 2.0;
  seed.gamma_r = 0.1;
  EXPECT_NE(refine_pole(t, seed).kind, ResonanceKind::complex_pole);
}

TEST(Pole, ThreadCountIndependent) {
  std::vector<Resonance> seeds(3);
  seeds[0].e_r = 8.93;
  seeds[0].gamma_r = 0.005;
  seeds[1].e_r = 8.94;
  seeds[1].gamma_r = 0.004;
  seeds[2].e_r = 1.0;
  seeds[2].gamma_r = 1e-3;
  const auto a = find_poles(shape_model(), seeds, {}, 1);
  const auto b = find_poles(shape_model(), seeds, {}, 3);
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    EXPECT_EQ(a[i].kind, b[i].kind);
    EXPECT_EQ(a[i].e_r, b[i].e_r);
    EXPECT_EQ(a[i].gamma_r, b[i].gamma_r);
  }
  EXPECT_NEAR(a[0].e_r, a[1].e_r, 1e-6);
}
