#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "sevl/spectral.hpp"

using namespace sevl;
constexpr double kPi = std::numbers::pi;

namespace {
TorusField scalar(GridPtr g, double (*fn)(const double*)) {
  return TorusField::from_function(g, 1, [fn](const double* x, double* o) { o[0] = fn(x); });
}
double max_abs_diff(const TorusField& a, const TorusField& b) {
  double m = 0;
  for (int c = 0; c < a.components(); ++c) {
    const auto va = a.values(c), vb = b.values(c);
    for (std::size_t i = 0; i < va.size(); ++i) m = std::max(m, std::abs(va[i] - vb[i]));
  }
  return m;
}
}  // namespace

TEST(Grid, CachedAndConsistent) {
  auto g = make_grid(2, 16);
  EXPECT_EQ(g.get(), make_grid(2, 16).get());
  EXPECT_EQ(g->size, 256u);
  EXPECT_NEAR(g->volume(), 4 * kPi * kPi, 1e-12);
  for (std::size_t i = 0; i < g->size; ++i) {
    EXPECT_EQ(g->index_of(g->k[i]), i);
    const auto& km = g->k[g->mirror[i]];
    if (!g->nyquist[i]) {
      EXPECT_EQ(km[0], -g->k[i][0]);
      EXPECT_EQ(km[1], -g->k[i][1]);
    }
  }
}

TEST(Spectral, TransformRoundTrip) {
  auto g = make_grid(3, 8);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  std::vector<cplx> v(g->size), w;
  for (auto& x : v) x = {nd(rng), nd(rng)};
  // forward drops Nyquist modes, so forward-inverse-forward is the identity on coefficients
  forward_transform(*g, v);
  w = v;
  inverse_transform(*g, w);
  forward_transform(*g, w);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(std::abs(v[i] - w[i]), 0.0, 1e-12);
  // band-limited grid data comes back exactly
  const TorusField f = random_field(g, 1, 0.0, 3, rng);
  auto vals = f.values(0);
  const auto again = TorusField::from_values(g, 1, vals).values(0);
  for (std::size_t i = 0; i < vals.size(); ++i) EXPECT_NEAR(std::abs(vals[i] - again[i]), 0.0, 1e-12);
}

TEST(Spectral, ParsevalAgainstQuadrature) {
  auto g = make_grid(2, 16);
  std::mt19937_64 rng(5);
  const TorusField f = random_field(g, 2, 0.0, 4, rng);
  double quad = 0;
  for (int c = 0; c < 2; ++c)
    for (double x : f.real_values(c)) quad += x * x;
  quad *= g->volume() / static_cast<double>(g->size);
  EXPECT_NEAR(sobolev_norm(0, f) * sobolev_norm(0, f), quad, 1e-10 * quad);
  EXPECT_NEAR(sobolev_norm(0, f), 1.0, 1e-12);
}

TEST(Spectral, SineNorms) {
  auto g = make_grid(1, 16);
  const TorusField f = scalar(g, [](const double* x) { return std::sin(x[0]); });
  EXPECT_NEAR(sobolev_norm(0, f), std::sqrt(kPi), 1e-12);
  EXPECT_NEAR(sobolev_norm(1, f), std::sqrt(2 * kPi), 1e-12);
  EXPECT_NEAR(wpinf_norm(0, f), 1.0, 1e-12);
  EXPECT_NEAR(wpinf_norm(1, f), 2.0, 1e-12);
}

TEST(Spectral, DerivativeMatchesCalculus) {
  auto g = make_grid(2, 16);
  const TorusField f = scalar(g, [](const double* x) { return std::sin(2 * x[0]) * std::cos(x[1]); });
  const TorusField fx = scalar(g, [](const double* x) { return 2 * std::cos(2 * x[0]) * std::cos(x[1]); });
  const TorusField fyy = scalar(g, [](const double* x) { return -std::sin(2 * x[0]) * std::cos(x[1]); });
  EXPECT_LT(max_abs_diff(derivative(f, 0), fx), 1e-12);
  EXPECT_LT(max_abs_diff(derivative(f, 1, 2), fyy), 1e-12);
  EXPECT_THROW(derivative(f, 2), std::invalid_argument);
}

TEST(Spectral, ProductOracle) {
  auto g = make_grid(1, 32);
  const TorusField a = scalar(g, [](const double* x) { return std::sin(x[0]); });
  const TorusField b = scalar(g, [](const double* x) { return std::cos(x[0]); });
  const TorusField want = scalar(g, [](const double* x) { return 0.5 * std::sin(2 * x[0]); });
  EXPECT_LT(max_abs_diff(multiply(a, b), want), 1e-12);
}

TEST(Spectral, LerayProjection) {
  auto g = make_grid(3, 8);
  std::mt19937_64 rng(11);
  const TorusField f = random_field(g, 3, 1.0, 3, rng);
  const TorusField p = leray_project(f);
  EXPECT_LT(sobolev_norm(0, divergence(p)), 1e-12);
  EXPECT_LT(sobolev_norm(0, leray_project(p) - p), 1e-13);
  // orthogonal complement is a gradient
  const TorusField phi = random_field(g, 1, 0.0, 3, rng, true);
  EXPECT_LT(sobolev_norm(0, leray_project(gradient(phi))), 1e-12);
  EXPECT_NEAR(sobolev_inner(2.0, f - p, p), 0.0, 1e-12);
  EXPECT_LE(sobolev_norm(1.5, p), sobolev_norm(1.5, f) + 1e-14);
}

TEST(Spectral, SolenoidalSamples) {
  auto g = make_grid(2, 16);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 5; ++i) {
    const TorusField u = random_solenoidal(g, 2.5, 4, rng);
    EXPECT_NEAR(sobolev_norm(2.5, u), 1.0, 1e-12);
    EXPECT_LT(sobolev_norm(0, divergence(u)), 1e-12);
    EXPECT_LT(u.max_imag(), 1e-12);
  }
}

TEST(Spectral, CutoffFunctions) {
  EXPECT_EQ(smooth_step(-0.5), 0.0);
  EXPECT_EQ(smooth_step(1.5), 1.0);
  EXPECT_NEAR(smooth_step(0.5), 0.5, 1e-12);
  double prev = 0;
  for (int i = 0; i <= 100; ++i) {
    const double v = smooth_step(i / 100.0);
    EXPECT_GE(v, prev - 1e-15);
    prev = v;
  }
  EXPECT_EQ(bump(0.0), 1.0);
  EXPECT_EQ(bump(-1.0), 1.0);
  EXPECT_EQ(bump(2.0), 0.0);
  EXPECT_GT(bump(1.5), 0.0);
  EXPECT_LT(bump(1.5), 1.0);
  EXPECT_EQ(cutoff_chi(2.0, 1.0), 1.0);
  EXPECT_EQ(cutoff_chi(2.0, 4.5), 0.0);
}

TEST(Spectral, MollifierProperties) {
  auto g = make_grid(2, 32);
  std::mt19937_64 rng(9);
  const TorusField f = random_field(g, 2, 0.0, 8, rng);
  const int n = 3;
  // commutes with derivatives and the projection
  EXPECT_LT(sobolev_norm(0, mollify(n, derivative(f, 1)) - derivative(mollify(n, f), 1)), 1e-13);
  EXPECT_LT(sobolev_norm(0, mollify(n, leray_project(f)) - leray_project(mollify(n, f))), 1e-13);
  // contraction, identity on low modes, kills |k| >= 2n
  EXPECT_LE(sobolev_norm(1, mollify(n, f)), sobolev_norm(1, f) + 1e-14);
  const TorusField low = scalar(g, [](const double* x) { return std::sin(x[0] + 2 * x[1]); });
  EXPECT_LT(sobolev_norm(0, mollify(n, low) - low), 1e-14);
  const TorusField high = scalar(g, [](const double* x) { return std::cos(6 * x[0]); });
  EXPECT_LT(sobolev_norm(0, mollify(n, high)), 1e-14);
}

TEST(Spectral, DealiasKeepsTwoThirds) {
  auto g = make_grid(1, 30);
  std::size_t kept = 0;
  for (std::size_t i = 0; i < g->size; ++i) {
    const bool in = std::abs(g->k[i][0]) <= g->cutoff;
    EXPECT_EQ(static_cast<bool>(g->keep[i]), in);
    kept += in;
  }
  EXPECT_EQ(kept, g->count_kept());
  EXPECT_EQ(g->cutoff, 10);
  EXPECT_THROW(make_grid(1, 27), std::invalid_argument);
}

TEST(Spectral, RealFieldsStayReal) {
  auto g = make_grid(2, 16);
  std::mt19937_64 rng(4);
  TorusField f = random_field(g, 1, 0.0, 5, rng);
  f = multiply(f, derivative(f, 0));
  EXPECT_LT(f.max_imag(), 1e-12);
}
