/// @file pressure.hpp
/// @brief Barotropic pressure laws and the density transforms that symmetrize them.
#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "sevl/spectral.hpp"

namespace sevl {

enum class LawKind { Gamma, Chaplygin, PiecewiseGamma, WhiteDwarf, SoftVacuum, Custom };
enum class SoundMode { ConstantSound, GeneralSound };

using RealFn = std::function<double(double)>;

/// One pure power segment a*rho^gamma of a piecewise law, valid on [lo, hi].
struct PowerSegment {
  double a = 1;
  double gamma = 1;
  double lo = 0;
  double hi = std::numeric_limits<double>::infinity();
};

struct PressureLaw {
  LawKind kind = LawKind::Gamma;
  std::string label;
  RealFn P, Pprime, Psecond;  // Psecond may be empty (then differenced)
  std::vector<double> params;
  std::vector<PowerSegment> segments;  // PiecewiseGamma only

  static PressureLaw gamma(double a, double g);
  static PressureLaw isothermal(double a) { return gamma(a, 1.0); }
  static PressureLaw chaplygin(double a, double kappa);
  /// Power segments on [b_{i-1}, c_i] joined by cubic Hermite transitions on [c_i, b_i].
  static PressureLaw piecewise_gamma(const std::vector<PowerSegment>& segments);
  /// The illustrative three-segment case: 2 rho^{5/3}, 3 rho, 2 rho^{3/2}.
  static PressureLaw piecewise_default();
  static PressureLaw white_dwarf(double c1, double c2, double c3);
  static PressureLaw soft_vacuum();
  static PressureLaw custom(RealFn P, RealFn Pprime, std::string label);
  /// Tabulated (rho, P, P') rows; monotone cubic interpolation in log rho.
  static PressureLaw custom_table(const std::string& path);
  /// Registry lookup: gamma, isothermal, chaplygin, piecewise-gamma, white-dwarf, soft-vacuum,
  /// custom:<file>. `params` overrides the defaults in order.
  static PressureLaw by_name(const std::string& name, const std::vector<double>& params = {});
};

struct PressureTransform {
  SoundMode mode = SoundMode::GeneralSound;
  RealFn r, r_prime, r_inv;
  RealFn theta;       // defined on (r0, r_inf)
  RealFn lambda_ext;  // on all of R
  double r0 = 0;
  double r_inf = std::numeric_limits<double>::infinity();
  double sound_constant = 0;  // ConstantSound only
  double lambda_lip = 0;      // sampled sup |Lambda'|
  bool analytic_derivative = true;  // false: r' is checked by central differences
  bool extension_builtin = true;  // false for the generic Custom blend
  std::string note;
};

PressureTransform build_transform(const PressureLaw& law);

/// max |P'(rho) - (rho r'(rho))^2| / max(1, P'(rho)) over the grid.
double verify_structural_identity(const PressureLaw& law, const PressureTransform& tr,
                                  const std::vector<double>& rho_grid);

struct AcousticsCheck {
  double differenced = 0;
  double closed_form = 0;
  bool agree = false;
};
/// Theta' at r(rho) by differencing against 1/2 rho P''/P'.
AcousticsCheck theta_prime_acoustics(const PressureLaw& law, const PressureTransform& tr,
                                     double rho);

struct AdmissibilityReport {
  bool ok = false;
  double margin = 0;  // distance of the field range to the nearest finite end
};
AdmissibilityReport admissibility_check(const PressureTransform& tr, const TorusField& varrho);

/// Sampled sup of |Lambda'| on a dense grid of transformed values.
double sample_lambda_lip(const PressureTransform& tr);

/// Log-spaced grid lo..hi with n points.
std::vector<double> log_grid(double lo, double hi, int n);

}  // namespace sevl
