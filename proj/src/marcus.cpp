#include "sevl/marcus.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <boost/math/special_functions/legendre.hpp>

#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace sevl {

namespace {

TorusField exact_flow(const PsdoOperator& Q, double lr, const TorusField& f) {
  const auto& g = *f.grid();
  const int m = Q.components();
  TorusField out(f.grid(), m);
  if (Q.is_scalar()) {
    for (std::size_t i = 0; i < g.size; ++i) {
      const cplx e = std::exp(lr * Q.scalar_symbol_at(g, i));
      for (int c = 0; c < m; ++c) out.hat(c)[i] = e * f.hat(c)[i];
    }
    return out;
  }
  Eigen::VectorXcd v(m);
  for (std::size_t i = 0; i < g.size; ++i) {
    Eigen::MatrixXcd p = Q.symbol_at(g, i) * lr;
    Eigen::MatrixXcd e = p.exp();
    for (int c = 0; c < m; ++c) v(c) = f.hat(c)[i];
    Eigen::VectorXcd w = e * v;
    for (int c = 0; c < m; ++c) out.hat(c)[i] = w(c);
  }
  return out;
}

TorusField rk4(const PsdoOperator& Q, double l, const TorusField& f, double r, int steps) {
  TorusField x = f;
  const double h = r / steps;
  for (int i = 0; i < steps; ++i) {
    TorusField k1 = Q.apply(x);
    k1 *= l;
    TorusField y = x;
    y.axpy(0.5 * h, k1);
    TorusField k2 = Q.apply(y);
    k2 *= l;
    y = x;
    y.axpy(0.5 * h, k2);
    TorusField k3 = Q.apply(y);
    k3 *= l;
    y = x;
    y.axpy(h, k3);
    TorusField k4 = Q.apply(y);
    k4 *= l;
    x.axpy(h / 6.0, k1);
    x.axpy(h / 3.0, k2);
    x.axpy(h / 3.0, k3);
    x.axpy(h / 6.0, k4);
  }
  return x;
}

double l2(const TorusField& f) { return sobolev_norm(0.0, f); }

}  // namespace

MarcusFlowResult marcus_flow(const PsdoOperator& Q, double l, const TorusField& f, double r,
                             double s, const FlowOptions& opts) {
  if (r < 0) throw std::invalid_argument("flow time must be >= 0");
  MarcusFlowResult res;
  if (r == 0.0 || l == 0.0) {
    res.endpoint = f;
  } else if (Q.kind() != OpKind::XDependent) {
    res.endpoint = exact_flow(Q, l * r, f);
  } else {
    int n = std::max(1, opts.substeps);
    TorusField coarse = rk4(Q, l, f, r, n);
    if (!opts.step_doubling) {
      res.endpoint = coarse;
      res.substeps_used = n;
    } else {
      for (;;) {
        TorusField fine = rk4(Q, l, f, r, 2 * n);
        const double scale = std::max(l2(fine), 1e-300);
        res.step_doubling_change = l2(fine - coarse) / scale;
        res.endpoint = fine;
        res.substeps_used = 2 * n;
        if (res.step_doubling_change < opts.tolerance || 2 * n >= opts.max_substeps) break;
        coarse = std::move(fine);
        n *= 2;
      }
    }
  }
  const double f2 = sobolev_inner(s, f, f);
  const double p2 = sobolev_inner(s, res.endpoint, res.endpoint);
  res.norm_defect = p2 - f2;
  if (l != 0.0 && r != 0.0) {
    const double qff = sobolev_inner(s, Q.apply(f), f);
    res.linearized_defect = res.norm_defect - 2.0 * l * r * qff;
  }
  return res;
}

TorusField flow_endpoint(const PsdoOperator& Q, double l, const TorusField& f, double r,
                         const FlowOptions& opts) {
  if (r == 0.0 || l == 0.0) return f;
  if (Q.kind() != OpKind::XDependent) return exact_flow(Q, l * r, f);
  return marcus_flow(Q, l, f, r, 0.0, opts).endpoint;
}

double expm1_quadratic(double x) {
  if (std::abs(x) < 1e-3) return 0.5 + x / 6.0 + x * x / 24.0 + x * x * x / 120.0;
  return (std::expm1(x) - x) / (x * x);
}

std::vector<DefectRow> flow_defect_bounds(const PsdoOperator& Q, const TorusField& f, double s,
                                          const std::vector<double>& l_grid, double c1, double c2,
                                          double inflate, double r, const FlowOptions& opts) {
  const double C1 = inflate * c1, C2 = inflate * c2;
  const double f2 = sobolev_inner(s, f, f);
  const double floor = 1e-12 * std::max(1.0, f2);
  std::vector<DefectRow> rows;
  for (double l : l_grid) {
    DefectRow row;
    row.l = l;
    row.r = r;
    auto res = marcus_flow(Q, l, f, r, s, opts);
    row.norm_defect = res.norm_defect;
    row.lin_defect = res.linearized_defect;
    const double x = 2.0 * C1 * std::abs(l) * r;
    row.norm_bound = std::expm1(x) * f2;
    row.lin_bound = 2.0 * C2 * (l * r) * (l * r) * expm1_quadratic(x) * f2;
    row.pass = std::abs(row.norm_defect) <= row.norm_bound + floor &&
               std::abs(row.lin_defect) <= row.lin_bound + floor;
    rows.push_back(row);
  }
  return rows;
}

std::string defect_csv(const std::vector<DefectRow>& rows) {
  std::ostringstream os;
  os.precision(12);
  os << "l,r,defect,bound,lin_defect,lin_bound,pass\n";
  for (const auto& x : rows)
    os << x.l << ',' << x.r << ',' << x.norm_defect << ',' << x.norm_bound << ',' << x.lin_defect
       << ',' << x.lin_bound << ',' << (x.pass ? 1 : 0) << '\n';
  return os.str();
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  static std::mutex mu;
  static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) {
    // boost returns the non-negative zeros only
    auto z = boost::math::legendre_p_zeros<double>(n);
    std::vector<double> x, w;
    for (double zi : z) {
      const double dp = boost::math::legendre_p_prime<double>(n, zi);
      const double wi = 2.0 / ((1.0 - zi * zi) * dp * dp);
      if (zi == 0.0) {
        x.push_back(0.0);
        w.push_back(wi);
      } else {
        x.push_back(zi);
        w.push_back(wi);
        x.push_back(-zi);
        w.push_back(wi);
      }
    }
    it = cache.emplace(n, std::make_pair(x, w)).first;
  }
  nodes = it->second.first;
  weights = it->second.second;
}

namespace {

// sum over both signs of w (p(l) - u - l Q u) with log-spaced panels on [eps, 1]
TorusField stable_quadrature(const PsdoOperator& Q, const LevyMeasure& nu, const TorusField& u,
                             const TorusField& qu, int nodes, int panels,
                             const FlowOptions& opts) {
  std::vector<double> x, w;
  gauss_legendre(nodes, x, w);
  TorusField acc(u.grid(), u.components());
  const double t0 = std::log(nu.eps), t1 = 0.0;
  const double hp = (t1 - t0) / panels;
  for (int p = 0; p < panels; ++p) {
    const double a = t0 + p * hp, b = a + hp;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double t = 0.5 * (a + b) + 0.5 * (b - a) * x[i];
      const double l = std::exp(t);
      // nu(dl) = c l^{-1-a} dl = c l^{-a} dt
      const double wt = 0.5 * (b - a) * w[i] * nu.c * std::pow(l, -nu.a);
      for (double sg : {1.0, -1.0}) {
        TorusField term = flow_endpoint(Q, sg * l, u, 1.0, opts);
        term -= u;
        term.axpy(-sg * l, qu);
        acc.axpy(wt, term);
      }
    }
  }
  return acc;
}

}  // namespace

TorusField compensator_drift(const PsdoOperator& Q, const LevyMeasure& nu, const TorusField& u,
                             CompensatorInfo* info, const FlowOptions& opts) {
  TorusField out(u.grid(), u.components());
  CompensatorInfo local;
  if (nu.kind == LevyKind::None || nu.total_rate() <= 0) {
    if (info) *info = local;
    return out;
  }
  const TorusField qu = Q.apply(u);
  if (nu.kind == LevyKind::TwoPoint) {
    for (double sg : {1.0, -1.0}) {
      TorusField term = flow_endpoint(Q, sg * nu.l0, u, 1.0, opts);
      term -= u;
      term.axpy(-sg * nu.l0, qu);
      out.axpy(0.5 * nu.rate, term);
    }
    if (info) *info = local;
    return out;
  }
  int panels = 1;
  const int nodes = 16;
  TorusField coarse = stable_quadrature(Q, nu, u, qu, nodes, panels, opts);
  for (;;) {
    TorusField fine = stable_quadrature(Q, nu, u, qu, 2 * nodes, panels, opts);
    const double scale = std::max(l2(fine), 1e-300);
    local.doubling_change = l2(fine - coarse) / scale;
    if (local.doubling_change < 1e-8 || panels >= 64) {
      out = coarse;
      break;
    }
    panels *= 2;
    coarse = stable_quadrature(Q, nu, u, qu, nodes, panels, opts);
  }
  local.nodes_per_sign = nodes;
  local.panels = panels;
  // jumps below eps: second-order term 1/2 l^2 Q^2 u integrated over |l| < eps
  TorusField small = Q.apply(qu);
  small *= 0.5 * nu.small_jump_second_moment();
  const double dn = l2(out);
  out += small;
  local.small_jump_ratio = dn > 0 ? l2(small) / dn : 0.0;
  if (info) *info = local;
  return out;
}

StabilityResult flow_stability(const PsdoOperator& Q, const TorusField& f, const TorusField& g,
                               double l, double theta, double c1, double inflate, double r,
                               const FlowOptions& opts) {
  StabilityResult res;
  const TorusField d = flow_endpoint(Q, l, f, r, opts) - flow_endpoint(Q, l, g, r, opts);
  res.lhs = sobolev_inner(theta, d, d);
  const TorusField fg = f - g;
  res.rhs = sobolev_inner(theta, fg, fg) * std::exp(2.0 * inflate * c1 * std::abs(l) * r);
  res.pass = res.lhs <= res.rhs + 1e-12 * std::max(1.0, res.rhs);
  return res;
}

double flow_level_difference(const PsdoOperator& Q, double l, const TorusField& f, int n, int m,
                             double theta, const FlowOptions& opts) {
  const TorusField a = flow_endpoint(Q.renormalized(n), l, f, 1.0, opts);
  const TorusField b = flow_endpoint(Q.renormalized(m), l, f, 1.0, opts);
  const TorusField d = a - b;
  return sobolev_inner(theta, d, d);
}

}  // namespace sevl
