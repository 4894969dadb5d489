#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sevl/dni.hpp"

using namespace sevl;

namespace {
FlowTrajectory synthetic(const std::vector<double>& times, const std::vector<double>& norms) {
  FlowTrajectory t;
  for (std::size_t i = 0; i < times.size(); ++i) {
    FlowSample s;
    s.time = times[i];
    s.htheta = norms[i];
    s.wp = norms[i];
    t.samples.push_back(s);
  }
  t.completed = true;
  return t;
}
}  // namespace

TEST(Dni, LyapunovDerivatives) {
  for (VKind v : {VKind::Identity, VKind::Log1p}) {
    for (double x : {0.0, 0.3, 5.0}) {
      const double h = 1e-5;
      const double d1 = (lyap_V(v, x + h) - lyap_V(v, x > h ? x - h : x)) / (x > h ? 2 * h : h);
      EXPECT_NEAR(lyap_dV(v, x), d1, 1e-5);
      const double d2 = (lyap_dV(v, x + h) - lyap_dV(v, x > h ? x - h : x)) / (x > h ? 2 * h : h);
      EXPECT_NEAR(lyap_d2V(v, x), d2, 1e-4);
    }
    EXPECT_EQ(lyap_V(v, 0.0), 0.0);
  }
}

TEST(Dni, TermsByHand) {
  auto g = make_grid(2, 16);
  const auto u = taylor_green(g);
  DniSpec spec;
  spec.V = VKind::Identity;
  spec.sigma = 1.0;
  spec.a1 = 0.1;
  spec.a2 = 0.2;
  spec.c_nl = 0.05;
  spec.Upsilon = 0.3;
  spec.M = 2.0;
  spec.h.kind = ItoCoefficient::Kind::Linear;
  spec.h.amplitude = 0.4;
  const auto t = dni_terms(spec, u);
  // |TG|_1^2 = 3 * 2 pi^2, W^{1,inf}: sup of u, du/dx, du/dy summed over components = 2 * 3
  const double x = 3 * 2 * std::acos(-1.0) * std::acos(-1.0);
  EXPECT_NEAR(t.x, x, 1e-10);
  EXPECT_NEAR(t.W1, 6.0, 1e-12);
  const double bold = (0.1 + 2 * 0.05 * 6.0) * x + 0.16 * x + 0.2 * x;
  EXPECT_NEAR(t.bold, bold, 1e-9);
  EXPECT_NEAR(t.damping, 0.6 * x, 1e-10);
  EXPECT_NEAR(t.decay, 36.0 / 4.0, 1e-10);
  EXPECT_DOUBLE_EQ(dni_functional(spec, u), t.bold);
}

TEST(Dni, GronwallEqualityAndViolation) {
  std::vector<double> t, f1, f2, q;
  for (int i = 0; i <= 2000; ++i) {
    const double s = i * 1e-3;
    t.push_back(s);
    f1.push_back(std::exp(-s));
    f2.push_back(std::exp(-s));
    q.push_back(1.0);
  }
  auto rep = gronwall_verify(t, f1, f2, q);
  EXPECT_TRUE(rep.preconditions);
  EXPECT_TRUE(rep.holds);
  EXPECT_LT(rep.equality_gap, 1e-6);
  // f1 not decreasing fast enough: precondition breaks
  std::vector<double> flat(t.size(), 1.0);
  rep = gronwall_verify(t, flat, flat, q);
  EXPECT_FALSE(rep.preconditions);
  EXPECT_FALSE(rep.holds);
  EXPECT_FALSE(gronwall_verify({0.0}, {1.0}, {1.0}, {1.0}).preconditions);
}

TEST(Dni, GeneratedTriplesSatisfyGronwall) {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 20; ++i) {
    const auto tr = generate_gronwall_triple(rng, 3.0, 1e-3);
    const auto rep = gronwall_verify(tr.t, tr.f1, tr.f2, tr.q);
    EXPECT_TRUE(rep.preconditions) << rep.note;
    EXPECT_TRUE(rep.holds) << rep.note;
    EXPECT_GE(rep.worst_slack, -1e-6);
  }
}

TEST(Dni, MonitorAcceptsDecayRejectsGrowth) {
  DniSpec spec;
  spec.V = VKind::Log1p;
  spec.M = 1.0;
  spec.G1 = 0.5;
  std::vector<double> times{0, 1, 2, 3, 4};
  std::vector<FlowTrajectory> down, up;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd(0, 0.01);
  for (int p = 0; p < 32; ++p) {
    std::vector<double> a, b;
    for (double s : times) {
      a.push_back(std::exp(-0.3 * s) * (1 + (s > 0 ? nd(rng) : 0)));
      b.push_back(std::exp(0.3 * s) * (1 + (s > 0 ? nd(rng) : 0)));
    }
    down.push_back(synthetic(times, a));
    up.push_back(synthetic(times, b));
  }
  const auto ok = lyapunov_monitor(down, spec, 1.0, 50);
  EXPECT_TRUE(ok.d1_pass);
  EXPECT_TRUE(ok.d2_pass);
  EXPECT_TRUE(ok.d2_monotone);
  EXPECT_NEAR(ok.z, 2.2414027, 1e-6);  // one-sided 1 - 0.05/4
  const auto bad = lyapunov_monitor(up, spec, 1.0, 50);
  EXPECT_FALSE(bad.d2_pass);
  EXPECT_FALSE(bad.d2_monotone);
  EXPECT_FALSE(bad.failure.empty());
  EXPECT_FALSE(lyapunov_monitor({}, spec, 1.0).d1_pass);
  EXPECT_EQ(monitor_csv(ok).substr(0, 4), "time");
}

TEST(Dni, SampleClassAndEstimators) {
  auto g = make_grid(2, 16);
  const auto fields = dni_sample_class(g, 2.5, 12, 5, 1e-2, 1e2);
  ASSERT_EQ(fields.size(), 12u);
  for (const auto& f : fields) {
    const double n = sobolev_norm(2.5, f);
    EXPECT_GE(n, 1e-2 * (1 - 1e-12));
    EXPECT_LE(n, 1e2 * (1 + 1e-12));
    EXPECT_LT(sobolev_norm(0, divergence(f)), 1e-10 * std::max(1.0, n));
  }
  const double c = estimate_nl_constant(g, 2.5, 4, 3, -1, 10);
  EXPECT_GT(c, 0.0);
  EXPECT_TRUE(std::isfinite(c));
  const double M = estimate_solenoidal_embedding(g, 1, 2.5, 4, 3, 10);
  EXPECT_GT(M, 0.0);
  EXPECT_EQ(estimate_solenoidal_embedding(g, 1, 2.5, 4, 3, 10), M);
}

TEST(Dni, NoiseGrowthConstant) {
  auto g = make_grid(2, 16);
  EXPECT_EQ(noise_growth_constant(build_bessel_transport(std::vector<double>{1.0, 0.0}, 0.0, 2),
                                  g, 2.5, 4, 1),
            0.0);
  EXPECT_NEAR(noise_growth_constant(build_identity(2, 2), g, 2.5, 4, 1), 3.0, 1e-9);
}
