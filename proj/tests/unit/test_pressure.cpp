#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "sevl/pressure.hpp"

using namespace sevl;

namespace {
std::vector<PressureLaw> all_laws() {
  return {PressureLaw::gamma(1.0, 5.0 / 3.0), PressureLaw::isothermal(2.0),
          PressureLaw::chaplygin(1.0, 0.8),   PressureLaw::piecewise_default(),
          PressureLaw::white_dwarf(1.0, 1.0, 1.0), PressureLaw::soft_vacuum()};
}
// points away from the piecewise breakpoints 1, 2, 3, 4
const std::vector<double> kProbe = {1e-3, 0.05, 0.3, 0.7, 1.5, 2.5, 3.5, 9.0, 150.0};
}  // namespace

TEST(Pressure, SoundSpeedIdentityEveryLaw) {
  for (const auto& law : all_laws()) {
    const auto tr = build_transform(law);
    EXPECT_LT(verify_structural_identity(law, tr, kProbe), 1e-6) << law.label;
    for (double rho : kProbe) {
      if (tr.mode == SoundMode::ConstantSound) continue;
      // transformed sound speed equals sqrt P'
      const double c = std::sqrt(law.Pprime(rho));
      EXPECT_NEAR(tr.theta(tr.r(rho)), c, 1e-6 * std::max(1.0, c)) << law.label << " " << rho;
    }
  }
}

TEST(Pressure, TransformRoundTripAndMonotone) {
  for (const auto& law : all_laws()) {
    const auto tr = build_transform(law);
    double prev = -INFINITY;
    for (double rho : kProbe) {
      const double y = tr.r(rho);
      EXPECT_GT(y, prev) << law.label;
      EXPECT_GT(y, tr.r0);
      EXPECT_LT(y, tr.r_inf);
      prev = y;
      EXPECT_NEAR(tr.r_inv(y), rho, 1e-8 * rho) << law.label << " " << rho;
    }
  }
}

TEST(Pressure, PrimeMatchesDifferencedPressure) {
  for (const auto& law : all_laws()) {
    for (double rho : {0.2, 0.7, 2.5, 7.0}) {
      const double h = 1e-5 * rho;
      const double d = (law.P(rho + h) - law.P(rho - h)) / (2 * h);
      EXPECT_NEAR(d, law.Pprime(rho), 1e-6 * std::max(1.0, law.Pprime(rho))) << law.label;
      if (law.Psecond) {
        const double d2 = (law.Pprime(rho + h) - law.Pprime(rho - h)) / (2 * h);
        EXPECT_NEAR(d2, law.Psecond(rho), 1e-5 * std::max(1.0, std::abs(law.Psecond(rho))))
            << law.label << " " << rho;
      }
    }
  }
}

TEST(Pressure, GammaClosedForm) {
  const auto law = PressureLaw::gamma(0.5, 3.0);
  const auto tr = build_transform(law);
  // r = 2 sqrt(a g)/(g-1) rho^{(g-1)/2}
  EXPECT_NEAR(tr.r(4.0), std::sqrt(1.5) * 4.0, 1e-12);
  EXPECT_EQ(tr.r0, 0.0);
  EXPECT_NEAR(tr.lambda_lip, 1.0, 1e-6);
  const auto iso = build_transform(PressureLaw::isothermal(4.0));
  EXPECT_EQ(iso.mode, SoundMode::ConstantSound);
  EXPECT_NEAR(iso.sound_constant, 2.0, 1e-12);
  EXPECT_NEAR(iso.r(std::exp(1.0)), 2.0, 1e-12);
}

TEST(Pressure, ChaplyginBranch) {
  const auto law = PressureLaw::chaplygin(2.0, 0.75);
  const auto tr = build_transform(law);
  for (double rho : kProbe) {
    EXPECT_LT(law.P(rho), 0.0);
    EXPECT_GT(law.Pprime(rho), 0.0);
    EXPECT_LT(tr.r(rho), 0.0);
  }
  EXPECT_EQ(tr.r_inf, 0.0);
  EXPECT_THROW(tr.r_inv(0.5), std::domain_error);
  EXPECT_THROW(PressureLaw::chaplygin(1.0, 0.4), std::invalid_argument);
}

TEST(Pressure, SoftVacuumNearZero) {
  const auto law = PressureLaw::soft_vacuum();
  const auto tr = build_transform(law);
  EXPECT_NEAR(law.Pprime(0.25), std::pow(std::log(0.25), -4), 1e-14);
  EXPECT_NEAR(tr.r(0.25), -1.0 / std::log(0.25), 1e-14);
  // P' is continuous across 1/2
  EXPECT_NEAR(law.Pprime(0.5 - 1e-12), law.Pprime(0.5 + 1e-12), 1e-9);
  EXPECT_NEAR(tr.r(0.5 - 1e-12), tr.r(0.5 + 1e-12), 1e-9);
  EXPECT_GT(tr.r(1e-30), 0.0);
  EXPECT_LT(tr.r(1e-30), 0.02);
  // extension is even
  EXPECT_EQ(tr.lambda_ext(-0.3), tr.lambda_ext(0.3));
}

TEST(Pressure, AcousticsAwayFromKinks) {
  for (const auto& law : all_laws()) {
    const auto tr = build_transform(law);
    for (double rho : {0.3, 1.5, 3.5, 7.0}) {
      const auto a = theta_prime_acoustics(law, tr, rho);
      EXPECT_TRUE(a.agree) << law.label << " " << rho << " " << a.differenced << " "
                           << a.closed_form;
    }
  }
}

TEST(Pressure, Admissibility) {
  const auto tr = build_transform(PressureLaw::gamma(1.0, 2.0));
  auto g = make_grid(1, 16);
  auto pos = TorusField::from_function(g, 1, [](const double* x, double* o) { o[0] = 1 + 0.5 * std::sin(x[0]); });
  auto neg = TorusField::from_function(g, 1, [](const double* x, double* o) { o[0] = 0.2 + std::sin(x[0]); });
  const auto ok = admissibility_check(tr, pos);
  EXPECT_TRUE(ok.ok);
  EXPECT_NEAR(ok.margin, 0.5, 1e-12);
  EXPECT_FALSE(admissibility_check(tr, neg).ok);
}

TEST(Pressure, TableLawReproducesSource) {
  const auto src = PressureLaw::gamma(1.0, 2.0);
  const auto path = std::filesystem::temp_directory_path() / "sevl_table_law.csv";
  {
    std::ofstream f(path);
    f.precision(17);
    f << "rho,P,dP\n";
    for (double rho : log_grid(1e-3, 1e3, 121)) f << rho << ',' << src.P(rho) << ',' << src.Pprime(rho) << '\n';
  }
  const auto law = PressureLaw::by_name("custom:" + path.string());
  EXPECT_EQ(law.kind, LawKind::Custom);
  for (double rho : {0.0123, 0.77, 31.0}) {
    EXPECT_NEAR(law.Pprime(rho), src.Pprime(rho), 1e-4 * src.Pprime(rho));
    EXPECT_NEAR(law.P(rho), src.P(rho), 1e-3 * std::max(1.0, src.P(rho)));
  }
  // power-law continuation beyond the table is exact for a pure power
  EXPECT_NEAR(law.Pprime(1e5), src.Pprime(1e5), 1e-6 * src.Pprime(1e5));
  const auto tr = build_transform(law);
  EXPECT_LT(verify_structural_identity(law, tr, {0.01, 1.0, 100.0}), 1e-5);
  std::filesystem::remove(path);
}

TEST(Pressure, RegistryErrors) {
  EXPECT_THROW(PressureLaw::by_name("nope"), std::invalid_argument);
  EXPECT_THROW(PressureLaw::by_name("custom:/no/such/file"), std::invalid_argument);
  EXPECT_THROW(PressureLaw::gamma(1.0, 0.5), std::invalid_argument);
  EXPECT_EQ(PressureLaw::by_name("gamma", {2.0, 3.0}).params[1], 3.0);
}

TEST(Pressure, LogGrid) {
  const auto g = log_grid(1e-2, 1e2, 5);
  ASSERT_EQ(g.size(), 5u);
  EXPECT_NEAR(g[2], 1.0, 1e-14);
  EXPECT_NEAR(g[4], 1e2, 1e-12);
}
