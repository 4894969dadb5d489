#include "sevl/incompressible.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sevl {

TorusField projected_advection(const TorusField& u) {
  const GridPtr& gp = u.grid();
  const auto& g = *gp;
  const int d = g.dim;
  if (u.components() != d) throw std::invalid_argument("velocity needs d components");
  std::vector<std::vector<cplx>> uv;
  for (int a = 0; a < d; ++a) uv.push_back(u.values(a));
  TorusField out(gp, d);
  std::vector<cplx> acc(g.size);
  for (int j = 0; j < d; ++j) {
    std::fill(acc.begin(), acc.end(), cplx{});
    const TorusField uj = u.component(j);
    for (int a = 0; a < d; ++a) {
      const auto dj = derivative(uj, a).values(0);
      for (std::size_t i = 0; i < g.size; ++i) acc[i] += uv[a][i] * dj[i];
    }
    forward_transform(g, acc);
    cplx* o = out.hat(j);
    for (std::size_t i = 0; i < g.size; ++i) o[i] = g.keep[i] ? acc[i] : cplx{};
  }
  return leray_project(out);
}

TorusField projected_drift(const TorusField& u, double Upsilon, bool nonlinear) {
  TorusField out = nonlinear ? projected_advection(u) : TorusField(u.grid(), u.components());
  if (Upsilon != 0.0) out.axpy(Upsilon, u);
  return out;
}

IncompressibleScheme::IncompressibleScheme(IncompressibleConfig cfg) : cfg_(std::move(cfg)) {
  if (!(cfg_.dt > 0)) throw std::invalid_argument("dt must be > 0");
  if (cfg_.Upsilon < 0) throw std::invalid_argument("damping must be >= 0");
  if (cfg_.Q1) q1n_ = cfg_.n > 0 ? cfg_.Q1->renormalized(cfg_.n) : *cfg_.Q1;
  if (cfg_.Q2) q2n_ = cfg_.n > 0 ? cfg_.Q2->renormalized(cfg_.n) : *cfg_.Q2;
}

TorusField IncompressibleScheme::rhs(const TorusField& u) const {
  TorusField out(u.grid(), u.components());
  if (cfg_.nonlinear) {
    TorusField a = cfg_.n > 0 ? projected_advection(mollify(cfg_.n, u)) : projected_advection(u);
    if (cfg_.n > 0) a = mollify(cfg_.n, a);
    out.axpy(-1.0, a);
  }
  if (cfg_.Upsilon != 0.0) out.axpy(-cfg_.Upsilon, u);
  return out;
}

TorusField IncompressibleScheme::drift_step(const TorusField& u, double dt) const {
  if (!cfg_.nonlinear && cfg_.Upsilon == 0.0) return u;
  const TorusField k1 = rhs(u);
  TorusField y = u;
  y.axpy(0.5 * dt, k1);
  const TorusField k2 = rhs(y);
  y = u;
  y.axpy(0.5 * dt, k2);
  const TorusField k3 = rhs(y);
  y = u;
  y.axpy(dt, k3);
  const TorusField k4 = rhs(y);
  TorusField out = u;
  out.axpy(dt / 6, k1);
  out.axpy(dt / 3, k2);
  out.axpy(dt / 3, k3);
  out.axpy(dt / 6, k4);
  return cfg_.nonlinear ? leray_project(out) : out;
}

TorusField IncompressibleScheme::step(const TorusField& u0, double t, const Increments& inc,
                                      double dt) const {
  TorusField u = drift_step(u0, dt);
  if (q1n_ && inc.dW != 0.0) u = flow_endpoint(*q1n_, inc.dW, u);
  if (cfg_.h.active() && inc.dWt != 0.0) {
    u.axpy(inc.dWt, cfg_.h.eval(t, u));
    u = leray_project(u);
  }
  if (q2n_) {
    for (double l : inc.jumps) u = flow_endpoint(*q2n_, l, u);
    const double small = cfg_.nu.small_jump_second_moment();
    const double first = cfg_.nu.first_moment();
    if (small != 0.0 || first != 0.0) {
      const TorusField qu = q2n_->apply(u);
      TorusField corr = q2n_->apply(qu);
      corr *= 0.5 * small;
      corr.axpy(-first, qu);
      u.axpy(dt, corr);
    }
    if (!inc.jumps.empty()) u = leray_project(u);
  }
  for (const auto& c : u.raw())
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
      throw std::runtime_error("non-finite velocity at t=" + std::to_string(t + dt));
  return u;
}

namespace {
FlowSample sample_of(const IncompressibleConfig& cfg, const TorusField& u, double t) {
  FlowSample s;
  s.time = t;
  s.hs = sobolev_norm(cfg.s, u);
  s.htheta = sobolev_norm(cfg.theta, u);
  s.wp = wpinf_norm(cfg.p, u);
  s.l2 = sobolev_norm(0.0, u);
  const double dv = sobolev_norm(0.0, divergence(u));
  s.divergence = s.l2 > 0 ? dv / s.l2 : dv;
  return s;
}
}  // namespace

FlowTrajectory simulate_incompressible(const IncompressibleScheme& scheme, const TorusField& u0,
                                       const NoisePath& path, int factor, bool keep_snapshots) {
  FlowTrajectory traj;
  const auto& cfg = scheme.config();
  const int steps = path.fine_steps() / factor;
  const double dt = path.horizon() / steps;
  TorusField u = u0;
  traj.samples.push_back(sample_of(cfg, u, 0.0));
  if (keep_snapshots) traj.snapshots.push_back(u);
  for (int k = 0; k < steps; ++k) {
    const double t = k * dt;
    try {
      u = scheme.step(u, t, path.coarse(k, factor), dt);
    } catch (const std::runtime_error& e) {
      traj.stop_reason = e.what();
      traj.final_field = u;
      return traj;
    }
    if ((k + 1) % std::max(1, cfg.sample_every) == 0 || k + 1 == steps) {
      traj.samples.push_back(sample_of(cfg, u, t + dt));
      if (keep_snapshots) traj.snapshots.push_back(u);
      if (traj.samples.back().wp > cfg.blowup) {
        traj.stop_reason = "blow-up proxy: W^{p,inf} norm above threshold";
        traj.final_field = u;
        return traj;
      }
    }
  }
  traj.completed = true;
  traj.final_field = u;
  return traj;
}

FlowTrajectory simulate_incompressible(const IncompressibleConfig& cfg, const TorusField& u0,
                                       bool keep_snapshots) {
  const int steps = std::max(1, static_cast<int>(std::lround(cfg.T / cfg.dt)));
  const bool brownian = cfg.Q1.has_value() || cfg.h.active();
  const LevyMeasure nu = cfg.Q2 ? cfg.nu : LevyMeasure::none();
  NoisePath path = NoisePath::generate(cfg.T, steps, nu, cfg.seed, brownian);
  IncompressibleScheme sch(cfg);
  return simulate_incompressible(sch, u0, path, 1, keep_snapshots);
}

std::string flow_csv(const FlowTrajectory& t) {
  std::ostringstream os;
  os.precision(12);
  os << "time,Hs_norm,Htheta_norm,Wpinf_norm,L2_norm,div_rel\n";
  for (const auto& s : t.samples)
    os << s.time << ',' << s.hs << ',' << s.htheta << ',' << s.wp << ',' << s.l2 << ','
       << s.divergence << '\n';
  return os.str();
}

TorusField taylor_green(GridPtr g) {
  if (g->dim != 2) throw std::invalid_argument("Taylor-Green field is two-dimensional");
  return TorusField::from_function(g, 2, [](const double* x, double* out) {
    out[0] = std::sin(x[0]) * std::cos(x[1]);
    out[1] = -std::cos(x[0]) * std::sin(x[1]);
  });
}

}  // namespace sevl
