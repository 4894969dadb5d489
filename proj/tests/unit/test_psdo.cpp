#include <gtest/gtest.h>

#include <cmath>
#include <algorithm>
#include <random>

#include "sevl/psdo.hpp"

using namespace sevl;

namespace {
TorusField scalar(GridPtr g, std::function<double(const double*)> fn) {
  return TorusField::from_function(g, 1, [fn](const double* x, double* o) { o[0] = fn(x); });
}
}  // namespace

TEST(Psdo, ConstantTransportIsDerivative) {
  auto g = make_grid(1, 32);
  const auto f = scalar(g, [](const double* x) { return std::sin(3 * x[0]); });
  const auto Q = build_bessel_transport(std::vector<double>{2.0}, 0.0, 1);
  const auto want = scalar(g, [](const double* x) { return 6 * std::cos(3 * x[0]); });
  EXPECT_LT(sobolev_norm(0, Q.apply(f) - want), 1e-12);
  const auto Qa = build_bessel_transport(std::vector<double>{1.0}, 0.5, 1);
  EXPECT_DOUBLE_EQ(Qa.order(), 2.0);
  const auto want_a = scalar(g, [](const double* x) { return 3 * std::sqrt(10.0) * std::cos(3 * x[0]); });
  EXPECT_LT(sobolev_norm(0, Qa.apply(f) - want_a), 1e-11);
  EXPECT_THROW(build_bessel_transport(std::vector<double>{1.0}, -0.75, 1), std::invalid_argument);
}

TEST(Psdo, RieszOnSine) {
  auto g = make_grid(1, 32);
  const double vs = 0.7;
  const auto Q = build_fractional_riesz({1.0}, vs, 1);
  const auto f = scalar(g, [](const double* x) { return std::sin(2 * x[0]); });
  const auto want = scalar(g, [vs](const double* x) { return -std::pow(2.0, vs) * std::cos(2 * x[0]); });
  EXPECT_LT(sobolev_norm(0, Q.apply(f) - want), 1e-12);
  EXPECT_EQ(Q.kind(), OpKind::Mikhlin);
}

TEST(Psdo, SkewMultipliersCancelExactly) {
  auto g = make_grid(2, 16);
  for (const auto& Q : {build_bessel_transport(std::vector<double>{1.0, -0.5}, 0.5, 2),
                        build_fractional_riesz({0.3, 1.0}, 1.5, 2), build_zero(2, 2)}) {
    for (double s : {0.0, 2.0}) {
      const auto r = cancel_probe(Q, g, s, 10, 17);
      EXPECT_LT(r.c1_hat, 1e-12) << Q.label();
      EXPECT_LT(r.c2_hat, 1e-9) << Q.label();
    }
  }
}

TEST(Psdo, SelfAdjointControlDoesNotCancel) {
  auto g = make_grid(2, 16);
  const auto r = cancel_probe(build_bessel_power(2, 1, 1.0), g, 0.0, 10, 3);
  EXPECT_GT(r.c1_hat, 1.0);
  const auto id = cancel_probe(build_identity(2, 1), g, 1.0, 5, 3);
  EXPECT_NEAR(id.c1_hat, 1.0, 1e-12);
  EXPECT_NEAR(id.c2_hat, 2.0, 1e-12);
}

TEST(Psdo, VariableTransportMatchesIntegrationByParts) {
  // <c f', f> = -1/2 int c' f^2 for real f
  auto g = make_grid(1, 64);
  auto c = scalar(g, [](const double* x) { return 1.0 + 0.5 * std::sin(x[0]); });
  auto dc = scalar(g, [](const double* x) { return 0.5 * std::cos(x[0]); });
  const auto Q = build_bessel_transport(std::vector<TorusField>{c}, 0.0, 1);
  EXPECT_EQ(Q.kind(), OpKind::XDependent);
  std::mt19937_64 rng(8);
  for (int t = 0; t < 5; ++t) {
    const auto f = random_field(g, 1, 0.0, 8, rng);
    const auto fv = f.real_values(0);
    const auto dv = dc.real_values(0);
    double want = 0;
    for (std::size_t i = 0; i < fv.size(); ++i) want += -0.5 * dv[i] * fv[i] * fv[i];
    want *= g->volume() / g->size;
    EXPECT_NEAR(sobolev_inner(0.0, Q.apply(f), f), want, 1e-11);
  }
}

TEST(Psdo, ConstantCoefficientFieldMatchesMultiplier) {
  auto g = make_grid(2, 16);
  auto one = scalar(g, [](const double*) { return 1.0; });
  auto half = scalar(g, [](const double*) { return 0.5; });
  const auto Qx = build_bessel_transport(std::vector<TorusField>{one, half}, 0.0, 2);
  const auto Qf = build_bessel_transport(std::vector<double>{1.0, 0.5}, 0.0, 2);
  std::mt19937_64 rng(1);
  const auto f = random_field(g, 2, 0.0, 4, rng);
  EXPECT_LT(sobolev_norm(0, Qx.apply(f) - Qf.apply(f)), 1e-11);
  const auto Ax = dense_matrix(Qx, g, true), Af = dense_matrix(Qf, g, true);
  EXPECT_LT((Ax - Af).norm(), 1e-9);
}

TEST(Psdo, DenseMatrixAdjointStructure) {
  auto g = make_grid(1, 16);
  const auto A = dense_matrix(build_bessel_transport(std::vector<double>{1.0}, 0.25, 1), g);
  EXPECT_LT((A + A.adjoint()).norm(), 1e-12);
  const auto B = dense_matrix(build_bessel_power(1, 1, 2.0), g);
  EXPECT_LT((B - B.adjoint()).norm(), 1e-12);
  const auto I = dense_matrix(build_identity(1, 2), g);
  EXPECT_LT((I - Eigen::MatrixXcd::Identity(I.rows(), I.cols())).norm(), 1e-14);
  const auto basis = dense_basis(*g, false);
  // |d/dx| from H^1 to L^2 is 1/sqrt(2) at |k|=1 and increases to 7/sqrt(50)
  const auto D = dense_matrix(build_bessel_transport(std::vector<double>{1.0}, 0.0, 1), g);
  EXPECT_NEAR(dense_operator_norm(D, *g, basis, 1, 1.0, 0.0), 7.0 / std::sqrt(50.0), 1e-12);
}

TEST(Psdo, RenormalizationCutsHighModes) {
  auto g = make_grid(1, 32);
  const auto Q = build_bessel_transport(std::vector<double>{1.0}, 0.0, 1);
  const auto Qn = Q.renormalized(2);
  EXPECT_EQ(Qn.mollify_levels().back(), 2);
  const auto low = scalar(g, [](const double* x) { return std::sin(2 * x[0]); });
  const auto high = scalar(g, [](const double* x) { return std::sin(5 * x[0]); });
  EXPECT_LT(sobolev_norm(0, Qn.apply(low) - Q.apply(low)), 1e-12);
  EXPECT_LT(sobolev_norm(0, Qn.apply(high)), 1e-12);
  EXPECT_LT(sobolev_norm(0, Q.scaled(-2.0).apply(low) + 2.0 * Q.apply(low)), 1e-12);
  EXPECT_THROW(Q.renormalized(0), std::invalid_argument);
  // skew structure survives J_n Q J_n
  EXPECT_LT(cancel_probe(Qn, g, 1.0, 5, 2).c1_hat, 1e-12);
}

TEST(Psdo, LerayCompatibleScalarMultiplier) {
  auto g = make_grid(2, 16);
  const auto Q = build_bessel_transport(std::vector<double>{1.0, 0.5}, 0.5, 2);
  std::mt19937_64 rng(6);
  const auto u = random_field(g, 2, 0.0, 4, rng);
  EXPECT_LT(sobolev_norm(0, Q.apply(leray_project(u)) - leray_project(Q.apply(u))), 1e-10);
}

TEST(Psdo, MollifierRateSlope) {
  const auto r = mollifier_rate(make_grid(1, 32), 2.0, 0.0, {2, 4, 8});
  ASSERT_EQ(r.norms.size(), 3u);
  EXPECT_GT(r.norms[0], r.norms[1]);
  EXPECT_GT(r.norms[1], r.norms[2]);
  EXPECT_DOUBLE_EQ(r.expected, -2.0);
  EXPECT_NEAR(r.slope, r.expected, 0.5);
}

TEST(Psdo, CancelReportCsv) {
  CancellationReport r;
  r.kind = "freq-only";
  EXPECT_EQ(CancellationReport::csv_header(), "kind,order,s,n_max,c1_hat,c2_hat,samples,seed");
  const std::string row = r.csv_row();
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 7);
}

TEST(Psdo, GalerkinSymmetricPartIsCoefficientDerivative) {
  // on kept modes, Q + Q* = -P c' P, so its L2 norm tends to sup|c'| = 0.5
  double prev = 0;
  for (int n : {16, 32, 64}) {
    auto g = make_grid(1, n);
    auto c = scalar(g, [](const double* x) { return 1.0 + 0.5 * std::sin(x[0]); });
    const auto A = dense_matrix(build_bessel_transport(std::vector<TorusField>{c}, 0.0, 1), g, true);
    const Eigen::MatrixXcd B = A + A.adjoint();
    const double nrm = dense_operator_norm(B, *g, dense_basis(*g, true), 1, 0.0, 0.0);
    EXPECT_LE(nrm, 0.5 + 1e-12);
    EXPECT_GE(nrm, prev);
    prev = nrm;
  }
  EXPECT_NEAR(prev, 0.5, 2e-3);
}
