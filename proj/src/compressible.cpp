#include "sevl/compressible.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "sevl/parallel.hpp"
#include "sevl/stats.hpp"

namespace sevl {

namespace {

std::vector<std::vector<cplx>> grad_values(const TorusField& scalar) {
  const int d = scalar.grid()->dim;
  std::vector<std::vector<cplx>> out;
  for (int a = 0; a < d; ++a) out.push_back(derivative(scalar, a).values(0));
  return out;
}

TorusField to_field(GridPtr g, std::vector<cplx> vals) {
  forward_transform(*g, vals);
  TorusField f(g, 1);
  for (std::size_t i = 0; i < g->size; ++i) f.hat(0)[i] = g->keep[i] ? vals[i] : cplx{};
  return f;
}

bool finite(const TorusField& f) {
  for (const auto& c : f.raw())
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return false;
  return true;
}

CompressibleState mollified(int n, const CompressibleState& X) {
  if (n <= 0) return X;
  return {mollify(n, X.varrho), mollify(n, X.u), X.time};
}

}  // namespace

std::pair<TorusField, TorusField> drift_F(const PressureTransform& tr,
                                          const CompressibleState& X) {
  const GridPtr& gp = X.varrho.grid();
  const auto& g = *gp;
  const int d = g.dim;
  if (X.u.components() != d) throw std::invalid_argument("velocity needs d components");
  const auto rv = X.varrho.values(0);
  const auto grad_r = grad_values(X.varrho);
  std::vector<std::vector<cplx>> uv;
  for (int a = 0; a < d; ++a) uv.push_back(X.u.values(a));
  const auto divu = divergence(X.u).values(0);

  std::vector<cplx> lam(g.size);
  if (tr.mode == SoundMode::ConstantSound) {
    std::fill(lam.begin(), lam.end(), cplx{tr.sound_constant, 0});
  } else {
    for (std::size_t i = 0; i < g.size; ++i) lam[i] = tr.lambda_ext(rv[i].real());
  }

  std::vector<cplx> fr(g.size);
  for (std::size_t i = 0; i < g.size; ++i) {
    cplx acc = lam[i] * divu[i];
    for (int a = 0; a < d; ++a) acc += uv[a][i] * grad_r[a][i];
    fr[i] = acc;
  }
  TorusField Fr = to_field(gp, fr);

  TorusField Fu(gp, d);
  for (int j = 0; j < d; ++j) {
    const auto grad_uj = grad_values(X.u.component(j));
    std::vector<cplx> acc(g.size);
    for (std::size_t i = 0; i < g.size; ++i) {
      cplx s = lam[i] * grad_r[j][i];
      for (int a = 0; a < d; ++a) s += uv[a][i] * grad_uj[a][i];
      acc[i] = s;
    }
    Fu.set_component(j, to_field(gp, acc));
  }
  return {Fr, Fu};
}

double state_hs_norm(double s, const CompressibleState& X) {
  return std::sqrt(sobolev_inner(s, X.varrho, X.varrho) + sobolev_inner(s, X.u, X.u));
}

double state_wp_norm(int p, const CompressibleState& X) {
  return wpinf_norm(p, X.varrho) + wpinf_norm(p, X.u);
}

namespace {
double cutoff_value(const SchemeConfig& cfg, const CompressibleState& X,
                    const CompressibleState& Xi) {
  if (cfg.R >= 1e20) return 1.0;
  CompressibleState diff{X.varrho - Xi.varrho, X.u - Xi.u, X.time};
  return cutoff_chi(cfg.R, state_wp_norm(cfg.p, diff));
}
}  // namespace

CutoffDrift mollified_cutoff_drift(const PressureTransform& tr, const CompressibleState& X,
                                   const SchemeConfig& cfg, const CompressibleState& Xi) {
  CutoffDrift out;
  out.chi = cutoff_value(cfg, X, Xi);
  out.varrho = TorusField(X.varrho.grid(), 1);
  out.u = TorusField(X.u.grid(), X.u.components());
  if (out.chi > 0) {
    auto [fr, fu] = drift_F(tr, mollified(cfg.n, X));
    if (cfg.n > 0) {
      fr = mollify(cfg.n, fr);
      fu = mollify(cfg.n, fu);
    }
    out.varrho.axpy(-out.chi, fr);
    out.u.axpy(-out.chi, fu);
  }
  if (cfg.noise.Q1) {
    const PsdoOperator q = cfg.n > 0 ? cfg.noise.Q1->renormalized(cfg.n) : *cfg.noise.Q1;
    out.u.axpy(0.5, q.apply(q.apply(X.u)));
  }
  return out;
}

// ---------------------------------------------------------------- scheme

CompressibleScheme::CompressibleScheme(PressureTransform tr, SchemeConfig cfg,
                                       CompressibleState Xi)
    : tr_(std::move(tr)), cfg_(std::move(cfg)), xi_(std::move(Xi)) {
  if (!(cfg_.dt > 0)) throw std::invalid_argument("dt must be > 0");
  if (!(cfg_.R >= 1)) throw std::invalid_argument("cut-off radius must be >= 1");
  if (cfg_.noise.Q1)
    q1n_ = cfg_.n > 0 ? cfg_.noise.Q1->renormalized(cfg_.n) : *cfg_.noise.Q1;
  if (cfg_.noise.Q2)
    q2n_ = cfg_.n > 0 ? cfg_.noise.Q2->renormalized(cfg_.n) : *cfg_.noise.Q2;
}

double CompressibleScheme::chi(const CompressibleState& X) const {
  return cutoff_value(cfg_, X, xi_);
}

void CompressibleScheme::rhs(const CompressibleState& X, TorusField& dr, TorusField& du,
                             double* chi_out) const {
  const double c = chi(X);
  if (chi_out) *chi_out = c;
  dr = TorusField(X.varrho.grid(), 1);
  du = TorusField(X.u.grid(), X.u.components());
  if (c <= 0) return;
  auto [fr, fu] = drift_F(tr_, mollified(cfg_.n, X));
  if (cfg_.n > 0) {
    fr = mollify(cfg_.n, fr);
    fu = mollify(cfg_.n, fu);
  }
  dr.axpy(-c, fr);
  du.axpy(-c, fu);
}

CompressibleState CompressibleScheme::drift_step(const CompressibleState& X, double dt,
                                                 double* chi_out) const {
  TorusField r1, u1, r2, u2, r3, u3, r4, u4;
  rhs(X, r1, u1, chi_out);
  auto stage = [&](const TorusField& dr, const TorusField& du, double h) {
    CompressibleState Y = X;
    Y.varrho.axpy(h, dr);
    Y.u.axpy(h, du);
    return Y;
  };
  rhs(stage(r1, u1, 0.5 * dt), r2, u2, nullptr);
  rhs(stage(r2, u2, 0.5 * dt), r3, u3, nullptr);
  rhs(stage(r3, u3, dt), r4, u4, nullptr);
  CompressibleState Y = X;
  Y.varrho.axpy(dt / 6, r1);
  Y.varrho.axpy(dt / 3, r2);
  Y.varrho.axpy(dt / 3, r3);
  Y.varrho.axpy(dt / 6, r4);
  Y.u.axpy(dt / 6, u1);
  Y.u.axpy(dt / 3, u2);
  Y.u.axpy(dt / 3, u3);
  Y.u.axpy(dt / 6, u4);
  return Y;
}

CompressibleState CompressibleScheme::step(const CompressibleState& X, const Increments& inc,
                                           double dt, StepInfo* info) const {
  double c = 1;
  // (a) deterministic drift
  CompressibleState Y = drift_step(X, dt, &c);
  // (b) Stratonovich multiplier noise, exact flow exp(Q_{1,n} dW)
  if (q1n_ && inc.dW != 0.0) Y.u = flow_endpoint(*q1n_, inc.dW, Y.u);
  // (c) Ito forcing
  if (cfg_.noise.z.active() && inc.dWt != 0.0) {
    const double cz = chi(Y);
    Y.u.axpy(cz * inc.dWt, cfg_.noise.z.eval(X.time, Y.u));
  }
  // (d) canonical jumps at step end, then the folded compensator drift
  if (q2n_) {
    for (double l : inc.jumps) Y.u = flow_endpoint(*q2n_, l, Y.u);
    const double small = cfg_.noise.nu.small_jump_second_moment();
    const double first = cfg_.noise.nu.first_moment();
    if (small != 0.0 || first != 0.0) {
      const TorusField qu = q2n_->apply(Y.u);
      TorusField corr = q2n_->apply(qu);
      corr *= 0.5 * small;
      corr.axpy(-first, qu);
      Y.u.axpy(dt, corr);
    }
  }
  Y.time = X.time + dt;
  if (info) {
    info->chi = c;
    info->njumps = static_cast<int>(inc.jumps.size());
  }
  if (!finite(Y.varrho) || !finite(Y.u))
    throw std::runtime_error("non-finite state at t=" + std::to_string(Y.time));
  return Y;
}

// ---------------------------------------------------------------- trajectories

namespace {
TrajectorySample sample_of(const CompressibleScheme& sch, const CompressibleState& X) {
  const auto& cfg = sch.config();
  TrajectorySample s;
  s.time = X.time;
  s.hs = state_hs_norm(cfg.s, X);
  s.wp = state_wp_norm(cfg.p, X);
  s.margin = admissibility_check(sch.transform(), X.varrho).margin;
  const int cut = std::max(1, X.varrho.grid()->n / 4);
  const TorusField tr = X.varrho - mollify(cut, X.varrho);
  const TorusField tu = X.u - mollify(cut, X.u);
  s.tail = std::sqrt(sobolev_inner(cfg.theta, tr, tr) + sobolev_inner(cfg.theta, tu, tu));
  return s;
}
}  // namespace

Trajectory simulate(const CompressibleScheme& scheme, const CompressibleState& X0,
                    const NoisePath& path, int factor) {
  Trajectory traj;
  const int steps = path.fine_steps() / factor;
  const double dt = path.horizon() / steps;
  const auto& cfg = scheme.config();
  CompressibleState X = X0;
  traj.samples.push_back(sample_of(scheme, X));
  int active = 0, since = 0, jumps = 0;
  for (int k = 0; k < steps; ++k) {
    StepInfo info;
    try {
      X = scheme.step(X, path.coarse(k, factor), dt, &info);
    } catch (const std::runtime_error& e) {
      traj.stop_reason = e.what();
      traj.final_state = X;
      return traj;
    }
    ++since;
    if (info.chi < 1.0) ++active;
    jumps += info.njumps;
    if ((k + 1) % std::max(1, cfg.sample_every) == 0 || k + 1 == steps) {
      auto s = sample_of(scheme, X);
      s.chi_active = static_cast<double>(active) / since;
      s.njumps = jumps;
      traj.samples.push_back(s);
      active = since = 0;
      if (s.wp > cfg.blowup) {
        traj.stop_reason = "blow-up proxy: W^{p,inf} norm above threshold";
        traj.final_state = X;
        return traj;
      }
    }
  }
  traj.completed = true;
  traj.final_state = X;
  return traj;
}

Trajectory simulate(const PressureTransform& tr, const SchemeConfig& cfg,
                    const CompressibleState& X0) {
  const int steps = std::max(1, static_cast<int>(std::lround(cfg.T / cfg.dt)));
  const bool brownian = cfg.noise.Q1.has_value() || cfg.noise.z.active();
  const LevyMeasure nu = cfg.noise.Q2 ? cfg.noise.nu : LevyMeasure::none();
  NoisePath path = NoisePath::generate(cfg.T, steps, nu, cfg.seed, brownian);
  CompressibleScheme sch(tr, cfg, X0);
  return simulate(sch, X0, path, 1);
}

std::string trajectory_csv(const Trajectory& t) {
  std::ostringstream os;
  os.precision(12);
  os << "time,Hs_norm,Wpinf_norm,admiss_margin,chi_active,njumps,tail\n";
  for (const auto& s : t.samples)
    os << s.time << ',' << s.hs << ',' << s.wp << ',' << s.margin << ',' << s.chi_active << ','
       << s.njumps << ',' << s.tail << '\n';
  return os.str();
}

ConvergenceStudy self_convergence(const PressureTransform& tr, const SchemeConfig& cfg,
                                  const CompressibleState& X0, int levels, int paths) {
  if (levels < 2 || paths < 1) throw std::invalid_argument("need >= 2 levels and >= 1 path");
  ConvergenceStudy out;
  out.paths = paths;
  const int coarse = std::max(1, static_cast<int>(std::lround(cfg.T / cfg.dt)));
  const int fine = coarse << (levels - 1);
  const bool brownian = cfg.noise.Q1.has_value() || cfg.noise.z.active();
  const LevyMeasure nu = cfg.noise.Q2 ? cfg.noise.nu : LevyMeasure::none();
  const CompressibleScheme sch(tr, cfg, X0);
  // sq[p][l]: squared difference between level l and l+1 on path p
  std::vector<std::vector<double>> sq(static_cast<std::size_t>(paths),
                                      std::vector<double>(static_cast<std::size_t>(levels - 1)));
  std::vector<std::string> fail(static_cast<std::size_t>(paths));
  parallel_for(paths, [&](int p) {
    const NoisePath path = NoisePath::generate(
        cfg.T, fine, nu, derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(p)), brownian);
    std::vector<CompressibleState> ends;
    for (int l = 0; l < levels; ++l) {
      const Trajectory tj = simulate(sch, X0, path, 1 << (levels - 1 - l));
      if (!tj.completed) {
        fail[static_cast<std::size_t>(p)] = tj.stop_reason;
        return;
      }
      ends.push_back(tj.final_state);
    }
    for (int l = 0; l + 1 < levels; ++l) {
      CompressibleState dX;
      dX.varrho = ends[static_cast<std::size_t>(l)].varrho - ends[static_cast<std::size_t>(l + 1)].varrho;
      dX.u = ends[static_cast<std::size_t>(l)].u - ends[static_cast<std::size_t>(l + 1)].u;
      const double e = state_hs_norm(0.0, dX);
      sq[static_cast<std::size_t>(p)][static_cast<std::size_t>(l)] = e * e;
    }
  });
  for (int p = 0; p < paths; ++p)
    if (!fail[static_cast<std::size_t>(p)].empty()) {
      out.failure = "path " + std::to_string(p) + ": " + fail[static_cast<std::size_t>(p)];
      return out;
    }
  std::vector<double> h, e;
  for (int l = 0; l + 1 < levels; ++l) {
    double m = 0;
    for (int p = 0; p < paths; ++p) m += sq[static_cast<std::size_t>(p)][static_cast<std::size_t>(l)];
    ConvergenceRow r;
    r.dt = cfg.T / (coarse << l);
    r.error = std::sqrt(m / paths);
    out.rows.push_back(r);
    h.push_back(r.dt);
    e.push_back(r.error);
  }
  out.order = loglog_fit(h, e).slope;
  return out;
}

std::string convergence_csv(const ConvergenceStudy& c) {
  std::ostringstream os;
  os.precision(12);
  os << "h,error\n";
  for (const auto& r : c.rows) os << r.dt << ',' << r.error << '\n';
  return os.str();
}

// ---------------------------------------------------------------- maximum principle

MaxPrincipleReport transport_max_principle(const VelocityField& v,
                                           const std::function<double(double)>& vartheta,
                                           double C, const TorusField& f0, double T, double dt,
                                           double a0, double b0, double slack) {
  MaxPrincipleReport rep;
  if (!(a0 > 0) && !(b0 < 0)) throw std::invalid_argument("need a0 > 0 or b0 < 0");
  const bool positive = a0 > 0;
  const GridPtr& gp = f0.grid();
  const auto& g = *gp;
  const int d = g.dim;

  auto divmax = [&](double t) {
    double m = 0;
    for (const auto& x : divergence(v(t)).values(0)) m = std::max(m, std::abs(x.real()));
    return m;
  };
  auto rhs = [&](double t, const TorusField& f) {
    const TorusField vt = v(t);
    const auto divv = divergence(vt).values(0);
    const auto fv = f.values(0);
    std::vector<std::vector<cplx>> vv, gf;
    for (int a = 0; a < d; ++a) {
      vv.push_back(vt.values(a));
      gf.push_back(derivative(f, a).values(0));
    }
    std::vector<cplx> out(g.size);
    for (std::size_t i = 0; i < g.size; ++i) {
      cplx acc = vartheta(fv[i].real()) * divv[i];
      for (int a = 0; a < d; ++a) acc += vv[a][i] * gf[a][i];
      out[i] = -acc;
    }
    return to_field(gp, out);
  };
  auto check = [&](double t, const TorusField& f, double integral) {
    const double lower = positive ? a0 * std::exp(-integral) : a0 * std::exp(integral);
    const double upper = positive ? b0 * std::exp(integral) : b0 * std::exp(-integral);
    const auto vals = f.real_values(0);
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double lo = vals[i] - lower, hi = upper - vals[i];
      if (rep.checks == 0) {
        rep.min_lower_slack = lo;
        rep.min_upper_slack = hi;
      }
      rep.min_lower_slack = std::min(rep.min_lower_slack, lo);
      rep.min_upper_slack = std::min(rep.min_upper_slack, hi);
      ++rep.checks;
      if ((lo < -slack || hi < -slack) && rep.pass) {
        rep.pass = false;
        std::ostringstream os;
        os << "envelope violated at t=" << t << " point " << i << " value " << vals[i]
           << " bounds [" << lower << "," << upper << "]";
        rep.failure = os.str();
      }
    }
  };

  const int steps = std::max(1, static_cast<int>(std::lround(T / dt)));
  const double h = T / steps;
  TorusField f = f0;
  double integral = 0, prev = C * divmax(0.0);
  check(0.0, f, 0.0);
  for (int k = 0; k < steps; ++k) {
    const double t = k * h;
    TorusField k1 = rhs(t, f);
    TorusField y = f;
    y.axpy(0.5 * h, k1);
    TorusField k2 = rhs(t + 0.5 * h, y);
    y = f;
    y.axpy(0.5 * h, k2);
    TorusField k3 = rhs(t + 0.5 * h, y);
    y = f;
    y.axpy(h, k3);
    TorusField k4 = rhs(t + h, y);
    f.axpy(h / 6, k1);
    f.axpy(h / 3, k2);
    f.axpy(h / 3, k3);
    f.axpy(h / 6, k4);
    const double cur = C * divmax(t + h);
    integral += 0.5 * h * (prev + cur);
    prev = cur;
    check(t + h, f, integral);
  }
  rep.div_integral = integral;
  return rep;
}

}  // namespace sevl
