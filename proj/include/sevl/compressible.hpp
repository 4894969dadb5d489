/// @file compressible.hpp
/// @brief Transformed barotropic system X = (varrho, u): drift, mollified cut-off scheme,
/// mixed-noise splitting steps, trajectories and the transport maximum principle.
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sevl/marcus.hpp"
#include "sevl/noise.hpp"
#include "sevl/pressure.hpp"

namespace sevl {

struct CompressibleState {
  TorusField varrho;  // scalar
  TorusField u;       // d components
  double time = 0;
};

struct NoiseSpec {
  std::optional<PsdoOperator> Q1;  // Stratonovich multiplier noise on u
  std::optional<PsdoOperator> Q2;  // canonical jump noise on u
  LevyMeasure nu;
  ItoCoefficient z;
};

struct SchemeConfig {
  int n = 0;          // mollifier level; <= 0 switches the mollifier off
  double R = 1e30;    // cut-off radius
  int p = 1;          // Lipschitz order used by the cut-off and the blow-up proxy
  double dt = 1e-3;
  double T = 1.0;
  NoiseSpec noise;
  std::uint64_t seed = 0;
  int sample_every = 1;
  double blowup = 1e6;
  double s = 3.0;      // logged strong norm
  double theta = 1.0;  // logged weak norm
};

/// F(X) of the transformed system (dX + F dt = noise).
std::pair<TorusField, TorusField> drift_F(const PressureTransform& tr,
                                          const CompressibleState& X);

struct CutoffDrift {
  TorusField varrho, u;
  double chi = 1;
};
/// -chi_R(|X - Xi|_{W^{p,inf}}) J_n F(J_n X) + 1/2 Q_{1,n}^2 X (rate of change).
CutoffDrift mollified_cutoff_drift(const PressureTransform& tr, const CompressibleState& X,
                                   const SchemeConfig& cfg, const CompressibleState& Xi);

double state_hs_norm(double s, const CompressibleState& X);
double state_wp_norm(int p, const CompressibleState& X);

struct StepInfo {
  double chi = 1;
  int njumps = 0;
};

class CompressibleScheme {
 public:
  CompressibleScheme(PressureTransform tr, SchemeConfig cfg, CompressibleState Xi);

  const SchemeConfig& config() const { return cfg_; }
  const PressureTransform& transform() const { return tr_; }
  /// Drift (RK4), exact Stratonovich exponential, Ito forcing, jumps plus folded compensator.
  CompressibleState step(const CompressibleState& X, const Increments& inc, double dt,
                         StepInfo* info = nullptr) const;
  /// Deterministic part only: X' = -chi J_n F(J_n X).
  CompressibleState drift_step(const CompressibleState& X, double dt, double* chi = nullptr) const;

 private:
  double chi(const CompressibleState& X) const;
  void rhs(const CompressibleState& X, TorusField& dr, TorusField& du, double* chi_out) const;

  PressureTransform tr_;
  SchemeConfig cfg_;
  CompressibleState xi_;
  std::optional<PsdoOperator> q1n_, q2n_;
};

struct TrajectorySample {
  double time = 0;
  double hs = 0;
  double wp = 0;
  double margin = 0;
  double chi_active = 0;  // fraction of steps since last sample with chi < 1
  int njumps = 0;
  double tail = 0;        // |(I - J_{N/4}) X|_theta
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  CompressibleState final_state;
  bool completed = false;
  std::string stop_reason;
};

/// March with `factor` fine increments per step of the given path.
Trajectory simulate(const CompressibleScheme& scheme, const CompressibleState& X0,
                    const NoisePath& path, int factor = 1);
/// Builds its own path from cfg.seed.
Trajectory simulate(const PressureTransform& tr, const SchemeConfig& cfg,
                    const CompressibleState& X0);
std::string trajectory_csv(const Trajectory& t);

struct ConvergenceRow {
  double dt = 0;
  double error = 0;  // RMS over paths of |X_dt(T) - X_{dt/2}(T)|_{L2}
};
struct ConvergenceStudy {
  std::vector<ConvergenceRow> rows;
  double order = 0;  // least-squares log-log slope of error against dt
  int paths = 0;
  std::string failure;  // non-empty if a path stopped early
};
/// Step halvings dt, dt/2, ..., dt/2^{levels-1} on shared noise paths (seeds derived from cfg.seed).
ConvergenceStudy self_convergence(const PressureTransform& tr, const SchemeConfig& cfg,
                                  const CompressibleState& X0, int levels, int paths);
/// h,error rows.
std::string convergence_csv(const ConvergenceStudy& c);

// --- maximum principle ---
using VelocityField = std::function<TorusField(double t)>;

struct MaxPrincipleReport {
  bool pass = true;
  double min_lower_slack = 0;  // min over (t,x) of f - lower
  double min_upper_slack = 0;  // min over (t,x) of upper - f
  double div_integral = 0;     // int_0^T C |div v|_inf
  int checks = 0;
  std::string failure;
};

/// Solves d_t f + vartheta(f) div v + v.grad f = 0 by RK4 and checks the exponential envelope
/// at every grid point and step (positive branch if a0 > 0, negative if b0 < 0).
MaxPrincipleReport transport_max_principle(const VelocityField& v,
                                           const std::function<double(double)>& vartheta,
                                           double C, const TorusField& f0, double T, double dt,
                                           double a0, double b0, double slack = 1e-6);

}  // namespace sevl
