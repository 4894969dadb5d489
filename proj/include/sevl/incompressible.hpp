/// @file incompressible.hpp
/// @brief Damped incompressible system on H^s_div: projected drift, splitting steps, trajectories.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sevl/marcus.hpp"
#include "sevl/noise.hpp"

namespace sevl {

struct IncompressibleConfig {
  double Upsilon = 0;      // linear damping
  bool nonlinear = true;   // advection switch
  int n = 0;               // mollifier level; <= 0 off
  double dt = 1e-3;
  double T = 1.0;
  std::optional<PsdoOperator> Q1;  // Stratonovich multiplier noise
  std::optional<PsdoOperator> Q2;  // canonical jump noise
  LevyMeasure nu;
  ItoCoefficient h;
  std::uint64_t seed = 0;
  int sample_every = 1;
  double blowup = 1e6;
  double s = 3.0;
  double theta = 1.0;
  int p = 1;
};

/// Pi[(u.grad)u] + Upsilon u (advection dealiased).
TorusField projected_drift(const TorusField& u, double Upsilon, bool nonlinear = true);
/// Pi[(u.grad)u] alone.
TorusField projected_advection(const TorusField& u);

class IncompressibleScheme {
 public:
  explicit IncompressibleScheme(IncompressibleConfig cfg);
  const IncompressibleConfig& config() const { return cfg_; }
  TorusField step(const TorusField& u, double t, const Increments& inc, double dt) const;
  TorusField drift_step(const TorusField& u, double dt) const;

 private:
  TorusField rhs(const TorusField& u) const;
  IncompressibleConfig cfg_;
  std::optional<PsdoOperator> q1n_, q2n_;
};

struct FlowSample {
  double time = 0;
  double hs = 0;      // |u|_s
  double htheta = 0;  // |u|_theta
  double wp = 0;      // |u|_{W^{p,inf}}
  double l2 = 0;
  double divergence = 0;  // spectral |div u| / |u|
};

struct FlowTrajectory {
  std::vector<FlowSample> samples;
  TorusField final_field;
  std::vector<TorusField> snapshots;  // only when requested
  bool completed = false;
  std::string stop_reason;
};

FlowTrajectory simulate_incompressible(const IncompressibleScheme& scheme, const TorusField& u0,
                                       const NoisePath& path, int factor = 1,
                                       bool keep_snapshots = false);
FlowTrajectory simulate_incompressible(const IncompressibleConfig& cfg, const TorusField& u0,
                                       bool keep_snapshots = false);
std::string flow_csv(const FlowTrajectory& t);

/// (sin x1 cos x2, -cos x1 sin x2)
TorusField taylor_green(GridPtr g);

}  // namespace sevl
