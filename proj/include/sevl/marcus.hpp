/// @file marcus.hpp
/// @brief Canonical jump flows d/dr p = l Q p, their defect bounds and the compensator integral.
#pragma once

#include <string>
#include <vector>

#include "sevl/levy.hpp"
#include "sevl/psdo.hpp"

namespace sevl {

struct FlowOptions {
  int substeps = 8;          // starting RK4 substeps on [0, r] for x-dependent Q
  double tolerance = 1e-8;   // step-doubling acceptance (relative, L2)
  int max_substeps = 4096;
  bool step_doubling = true;
};

struct MarcusFlowResult {
  TorusField endpoint;
  double norm_defect = 0;        // |p(r)|^2 - |f|^2 in H^s
  double linearized_defect = 0;  // norm_defect - 2 l r <Qf,f>_s
  int substeps_used = 0;         // 0 for exact per-mode exponentials
  double step_doubling_change = 0;
};

/// Flow of l*Q up to time r. Multipliers: exact per-mode exponentials.
/// x-dependent: RK4, substeps doubled until two successive resolutions agree.
MarcusFlowResult marcus_flow(const PsdoOperator& Q, double l, const TorusField& f, double r = 1.0,
                             double s = 0.0, const FlowOptions& opts = {});
/// Endpoint only (no defect bookkeeping).
TorusField flow_endpoint(const PsdoOperator& Q, double l, const TorusField& f, double r = 1.0,
                         const FlowOptions& opts = {});

/// phi(x) = (e^x - x - 1)/x^2, stable near 0.
double expm1_quadratic(double x);

struct DefectRow {
  double l = 0;
  double r = 1;
  double norm_defect = 0;
  double norm_bound = 0;
  double lin_defect = 0;
  double lin_bound = 0;
  bool pass = false;
};

/// Checks |norm defect| <= (e^{2 C1 |l| r}-1)|f|^2 and
/// |linearized defect| <= 2 C2 (lr)^2 phi(2 C1 |l| r) |f|^2, constants multiplied by `inflate`.
std::vector<DefectRow> flow_defect_bounds(const PsdoOperator& Q, const TorusField& f, double s,
                                          const std::vector<double>& l_grid, double c1, double c2,
                                          double inflate = 1.5, double r = 1.0,
                                          const FlowOptions& opts = {});
std::string defect_csv(const std::vector<DefectRow>& rows);

struct CompensatorInfo {
  int nodes_per_sign = 0;      // Gauss-Legendre nodes actually used per sign and panel
  int panels = 0;
  double doubling_change = 0;  // relative L2 change when nodes are doubled
  double small_jump_ratio = 0; // |small-jump correction| / |drift|
};

/// int (p(1,l,u) - u - l Q u) nu(dl), plus the folded small-jump term for truncated stable laws.
TorusField compensator_drift(const PsdoOperator& Q, const LevyMeasure& nu, const TorusField& u,
                             CompensatorInfo* info = nullptr, const FlowOptions& opts = {});

/// Gauss-Legendre nodes and weights on [-1,1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

struct StabilityResult {
  double lhs = 0;  // |p(f) - p(g)|^2_theta
  double rhs = 0;  // |f-g|^2_theta e^{2 C1 |l| r}
  bool pass = false;
};

StabilityResult flow_stability(const PsdoOperator& Q, const TorusField& f, const TorusField& g,
                               double l, double theta, double c1, double inflate = 1.5,
                               double r = 1.0, const FlowOptions& opts = {});

/// |p_n(1,l,f) - p_m(1,l,f)|^2_theta for the renormalized operators J_n Q J_n, J_m Q J_m.
double flow_level_difference(const PsdoOperator& Q, double l, const TorusField& f, int n, int m,
                             double theta, const FlowOptions& opts = {});

}  // namespace sevl
