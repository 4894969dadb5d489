#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <random>

#include "sevl/levy.hpp"
#include "sevl/noise.hpp"

using namespace sevl;
using boost::math::quadrature::gauss_kronrod;

namespace {
double integrate(std::function<double(double)> f, double a, double b) {
  return gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-13);
}
}  // namespace

TEST(Levy, TruncatedStableMomentsMatchQuadrature) {
  for (double a : {0.5, 1.0, 1.5}) {
    const auto m = LevyMeasure::truncated_stable(a, 0.8, 1e-2);
    auto dens = [&](double l) { return 0.8 * std::pow(l, -1 - a); };
    const double rate = 2 * integrate(dens, 1e-2, 1.0);
    const double m2 = 2 * integrate([&](double l) { return l * l * dens(l); }, 1e-2, 1.0);
    boost::math::quadrature::tanh_sinh<double> ts;
    const double m2s = 2 * ts.integrate([&](double l) { return l > 0 ? 0.8 * std::pow(l, 1 - a) : 0.0; }, 0.0, 1e-2);
    const double m1 = integrate([&](double l) { return l * dens(l); }, 1e-2, 1.0);
    EXPECT_NEAR(m.total_rate(), rate, 1e-9 * rate);
    EXPECT_NEAR(m.second_moment(), m2, 1e-10);
    EXPECT_NEAR(m.small_jump_second_moment(), m2s, 1e-10);
    EXPECT_NEAR(m.size_mean_abs(), 2 * m1 / rate, 1e-9);
    EXPECT_NEAR(m.size_mean_square(), m2 / rate, 1e-10);
    EXPECT_EQ(m.first_moment(), 0.0);
  }
}

TEST(Levy, TwoPointMoments) {
  const auto m = LevyMeasure::two_point(0.5, 4.0);
  EXPECT_EQ(m.total_rate(), 4.0);
  EXPECT_EQ(m.second_moment(), 1.0);
  EXPECT_EQ(m.small_jump_second_moment(), 0.0);
  EXPECT_EQ(LevyMeasure::none().total_rate(), 0.0);
  EXPECT_THROW(LevyMeasure::two_point(1.5, 1.0), std::invalid_argument);
  EXPECT_THROW(LevyMeasure::truncated_stable(2.0, 1.0), std::invalid_argument);
  EXPECT_THROW(LevyMeasure::truncated_stable(1.0, 1.0, 0.0), std::invalid_argument);
}

TEST(Levy, SamplerMatchesSizeLaw) {
  const auto m = LevyMeasure::truncated_stable(1.2, 1.0, 1e-2);
  std::mt19937_64 rng(21);
  const int n = 200000;
  double s1 = 0, s2 = 0, sgn = 0;
  for (int i = 0; i < n; ++i) {
    const double l = m.sample_size(rng);
    ASSERT_GE(std::abs(l), 1e-2 - 1e-15);
    ASSERT_LE(std::abs(l), 1.0);
    s1 += std::abs(l);
    s2 += l * l;
    sgn += l > 0 ? 1 : -1;
  }
  EXPECT_NEAR(s1 / n, m.size_mean_abs(), 5e-3 * 5);
  EXPECT_NEAR(s2 / n, m.size_mean_square(), 5e-3);
  EXPECT_NEAR(sgn / n, 0.0, 0.01);
}

TEST(Levy, PoissonCounts) {
  const auto m = LevyMeasure::two_point(0.3, 5.0);
  LevyDriver drv(m, 4);
  const int reps = 4000;
  double total = 0;
  for (int i = 0; i < reps; ++i) {
    const auto js = drv.sample_jumps(0.0, 2.0);
    total += js.size();
    for (std::size_t k = 1; k < js.size(); ++k) ASSERT_LT(js[k - 1].time, js[k].time);
    for (const auto& j : js) ASSERT_EQ(std::abs(j.l), 0.3);
  }
  // mean 10, sd of the average sqrt(10/4000)
  EXPECT_NEAR(total / reps, 10.0, 4 * std::sqrt(10.0 / reps));
  EXPECT_TRUE(drv.sample_jumps(1.0, 1.0).empty());
}

TEST(Noise, DerivedSeedsDiffer) {
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
  EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
}

TEST(Noise, CoarseLevelsShareThePath) {
  const auto nu = LevyMeasure::two_point(0.5, 20.0);
  const auto p = NoisePath::generate(1.0, 64, nu, 99);
  double fine_w = 0, coarse_w = 0;
  std::size_t fine_j = 0, coarse_j = 0;
  for (int k = 0; k < 64; ++k) {
    const auto inc = p.coarse(k, 1);
    fine_w += inc.dW;
    fine_j += inc.jumps.size();
  }
  for (int k = 0; k < 8; ++k) {
    const auto inc = p.coarse(k, 8);
    coarse_w += inc.dW;
    coarse_j += inc.jumps.size();
    const auto a = p.coarse(2 * k, 4), b = p.coarse(2 * k + 1, 4);
    EXPECT_NEAR(inc.dW, a.dW + b.dW, 1e-14);
    EXPECT_NEAR(inc.dWt, a.dWt + b.dWt, 1e-14);
  }
  EXPECT_NEAR(fine_w, coarse_w, 1e-13);
  EXPECT_EQ(fine_j, p.jumps().size());
  EXPECT_EQ(coarse_j, p.jumps().size());
  EXPECT_THROW(p.coarse(0, 3), std::invalid_argument);
  EXPECT_THROW(p.coarse(8, 8), std::out_of_range);
}

TEST(Noise, BrownianVariance) {
  const auto p = NoisePath::generate(2.0, 20000, LevyMeasure::none(), 5);
  double q = 0, qt = 0, cross = 0;
  for (int k = 0; k < p.fine_steps(); ++k) {
    const auto inc = p.coarse(k, 1);
    q += inc.dW * inc.dW;
    qt += inc.dWt * inc.dWt;
    cross += inc.dW * inc.dWt;
  }
  // quadratic variation ~ T with relative sd sqrt(2/n)
  EXPECT_NEAR(q, 2.0, 0.06);
  EXPECT_NEAR(qt, 2.0, 0.06);
  EXPECT_NEAR(cross, 0.0, 0.06);
  const auto silent = NoisePath::generate(1.0, 10, LevyMeasure::none(), 5, false);
  EXPECT_EQ(silent.coarse(3, 1).dW, 0.0);
}

TEST(Noise, ItoCoefficientKinds) {
  auto g = make_grid(1, 16);
  std::mt19937_64 rng(1);
  const auto u = random_field(g, 1, 0.0, 4, rng);
  ItoCoefficient h;
  EXPECT_FALSE(h.active());
  EXPECT_EQ(sobolev_norm(0, h.eval(0, u)), 0.0);
  h.kind = ItoCoefficient::Kind::Linear;
  h.amplitude = 0.3;
  EXPECT_NEAR(sobolev_norm(0, h.eval(0, u) - 0.3 * u), 0.0, 1e-15);
  h.kind = ItoCoefficient::Kind::Saturating;
  h.embedding_M = 2.0;
  const double fac = 0.3 * std::sqrt(1 + wpinf_norm(1, u) / 2.0);
  EXPECT_NEAR(sobolev_norm(0, h.eval(0, u) - fac * u), 0.0, 1e-14);
  h.kind = ItoCoefficient::Kind::Additive;
  h.direction = TorusField(g, 2);
  EXPECT_THROW(h.eval(0, u), std::invalid_argument);
}
