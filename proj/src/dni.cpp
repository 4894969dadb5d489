#include "sevl/dni.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

#include "sevl/parallel.hpp"
#include "sevl/stats.hpp"

namespace sevl {

std::string to_string(VKind v) { return v == VKind::Identity ? "identity" : "log1p"; }

double lyap_V(VKind v, double x) { return v == VKind::Identity ? x : std::log1p(x); }
double lyap_dV(VKind v, double x) { return v == VKind::Identity ? 1.0 : 1.0 / (1.0 + x); }
double lyap_d2V(VKind v, double x) {
  return v == VKind::Identity ? 0.0 : -1.0 / ((1.0 + x) * (1.0 + x));
}

std::string DniSpec::describe() const {
  std::ostringstream os;
  os.precision(10);
  os << "V=" << to_string(V) << " Upsilon=" << Upsilon << " a1=" << a1 << " a2=" << a2
     << " c=" << c_nl << " M=" << M << " sigma=" << sigma << " p=" << p << " h=" << h.describe()
     << " G1=" << G1 << " G2=" << G2 << " G3=" << G3;
  return os.str();
}

namespace {
// random-perturbation hill climb of a scale-invariant ratio, started from a random field
double climb(TorusField u, const std::function<double(const TorusField&)>& ratio, int iters,
             std::mt19937_64& rng, double sigma, double band) {
  double best = ratio(u), step = 0.3;
  for (int it = 0; it < iters; ++it) {
    TorusField v = u;
    v.axpy(step * sobolev_norm(sigma, u), random_solenoidal(u.grid(), sigma, band, rng));
    const double r = ratio(v);
    if (r > best) {
      best = r;
      u = v;
      step = std::min(1.0, step * 1.3);
    } else {
      step = std::max(1e-3, step * 0.8);
    }
  }
  return best;
}
}  // namespace

double estimate_nl_constant(GridPtr g, double s, int samples, std::uint64_t seed, double band,
                            int ascent) {
  if (g->dim < 2) throw std::invalid_argument("solenoidal fields need d >= 2");
  if (band <= 0) band = g->n / 4.0;
  std::mt19937_64 rng(seed);
  auto ratio = [s](const TorusField& u) {
    const double w = wpinf_norm(1, u);
    const double n2 = sobolev_inner(s, u, u);
    if (w <= 0 || n2 <= 0) return 0.0;
    return std::abs(sobolev_inner(s, projected_advection(u), u)) / (w * n2);
  };
  double best = 0;
  for (int i = 0; i < samples; ++i)
    best = std::max(best, climb(random_solenoidal(g, s, band, rng), ratio, ascent, rng, s, band));
  return best;
}

double estimate_solenoidal_embedding(GridPtr g, int p, double sigma, int samples,
                                     std::uint64_t seed, int ascent) {
  const double band = g->n / 4.0;
  std::mt19937_64 rng(seed);
  auto ratio = [p, sigma](const TorusField& u) {
    const double n = sobolev_norm(sigma, u);
    return n > 0 ? wpinf_norm(p, u) / n : 0.0;
  };
  double best = 0;
  for (int i = 0; i < samples; ++i)
    best = std::max(best, climb(random_solenoidal(g, sigma, band, rng), ratio, ascent, rng, sigma, band));
  return best;
}

double noise_growth_constant(const PsdoOperator& Q, GridPtr g, double s, int samples,
                             std::uint64_t seed) {
  if (Q.skew_exact() && Q.kind() == OpKind::FreqOnly) return 0.0;
  return 1.5 * cancel_probe(Q, g, s, samples, seed).c2_hat;
}

DniTerms dni_terms(const DniSpec& spec, const TorusField& u) {
  DniTerms t;
  t.x = sobolev_inner(spec.sigma, u, u);
  t.W1 = wpinf_norm(1, u);
  t.Wp = spec.p == 1 ? t.W1 : wpinf_norm(spec.p, u);
  const double v1 = lyap_dV(spec.V, t.x);
  const double v2 = lyap_d2V(spec.V, t.x);
  double hh = 0, hu = 0;
  if (spec.h.active()) {
    const TorusField hf = spec.h.eval(0.0, u);
    hh = sobolev_inner(spec.sigma, hf, hf);
    hu = sobolev_inner(spec.sigma, hf, u);
  }
  t.bold = v1 * ((spec.a1 + 2 * spec.c_nl * t.W1) * t.x + hh) + 2 * v2 * hu * hu +
           spec.a2 * lyap_V(spec.V, t.x);
  t.damping = 2 * spec.Upsilon * v1 * t.x;
  t.decay = lyap_V(spec.V, t.Wp * t.Wp / (spec.M * spec.M));
  return t;
}

double dni_functional(const DniSpec& spec, const TorusField& u) { return dni_terms(spec, u).bold; }

std::string to_string(DniLevel l) {
  switch (l) {
    case DniLevel::D1: return "D1";
    case DniLevel::D2: return "D2";
    case DniLevel::D3: return "D3";
  }
  return "?";
}

std::vector<TorusField> dni_sample_class(GridPtr g, double sigma, int samples, std::uint64_t seed,
                                         double amp_lo, double amp_hi) {
  std::mt19937_64 rng(seed);
  std::vector<TorusField> out;
  const double l0 = std::log(amp_lo), l1 = std::log(amp_hi);
  for (int i = 0; i < samples; ++i) {
    const double a = std::exp(samples > 1 ? l0 + (l1 - l0) * i / (samples - 1) : l0);
    out.push_back(a * random_solenoidal(g, sigma, g->n / 4.0, rng));
  }
  return out;
}

DniReport check_dni(DniLevel level, const DniSpec& spec, const std::vector<TorusField>& fields) {
  DniReport rep;
  rep.level = level;
  rep.samples = static_cast<int>(fields.size());
  std::vector<DniTerms> terms;
  for (const auto& f : fields) terms.push_back(dni_terms(spec, f));

  double g1 = 0, g3 = std::numeric_limits<double>::infinity();
  for (const auto& t : terms) {
    const double v = lyap_V(spec.V, t.x);
    if (v > 0) g1 = std::max(g1, t.bold / v);
    if (t.decay > 0) g3 = std::min(g3, (t.damping - t.bold) / t.decay);
  }
  rep.G1 = g1;
  rep.G2 = 0;
  rep.G3 = std::isfinite(g3) ? g3 : 0;

  const double G1 = spec.G1 > 0 || spec.G2 > 0 ? spec.G1 : rep.G1;
  const double G2 = spec.G1 > 0 || spec.G2 > 0 ? spec.G2 : rep.G2;
  const double G3 = spec.G3 > 0 ? spec.G3 : rep.G3;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const auto& t = terms[i];
    double m = 0;
    switch (level) {
      case DniLevel::D1: m = G1 * lyap_V(spec.V, t.x) + G2 - t.bold; break;
      case DniLevel::D2: m = t.damping - t.bold; break;
      case DniLevel::D3: m = t.damping - t.bold - G3 * t.decay; break;
    }
    if (m < rep.worst_margin) {
      rep.worst_margin = m;
      rep.worst_amplitude = std::sqrt(t.x);
    }
  }
  // relative slack for roundoff in the fitted constants
  const double tol = 1e-12;
  rep.pass = rep.worst_margin >= -tol && (level != DniLevel::D3 || G3 > 0);
  if (!rep.pass) rep.label = "falsified on sample class";
  return rep;
}

DniReport check_dni(DniLevel level, const DniSpec& spec, GridPtr g, int samples,
                    std::uint64_t seed) {
  return check_dni(level, spec, dni_sample_class(g, spec.sigma, samples, seed));
}

DniSpec example_spec(GridPtr g, const ExampleOptions& opt) {
  DniSpec spec;
  spec.V = VKind::Log1p;
  spec.sigma = opt.sigma;
  spec.p = opt.p;
  spec.a1 = opt.a1;
  spec.a2 = 0;
  spec.c_nl = opt.inflate * estimate_nl_constant(g, opt.sigma, opt.samples,
                                                 derive_seed(opt.seed, 12), -1, opt.ascent);
  spec.M = opt.inflate * estimate_solenoidal_embedding(g, opt.p, opt.sigma, opt.samples,
                                                       derive_seed(opt.seed, 11), opt.ascent);
  spec.h.kind = ItoCoefficient::Kind::Saturating;
  spec.h.amplitude = std::sqrt(4 * spec.c_nl * spec.M);
  spec.h.embedding_M = spec.M;

  const auto fields = dni_sample_class(g, opt.sigma, opt.samples, derive_seed(opt.seed, 13));
  double need = 0;
  for (const auto& f : fields) {
    const DniTerms t = dni_terms(spec, f);
    const double lin = 2 * lyap_dV(spec.V, t.x) * t.x;
    if (lin > 0) need = std::max(need, (t.bold + opt.G3_target * t.decay) / lin);
  }
  spec.Upsilon = opt.upsilon_factor * need;
  spec.G3 = opt.G3_target;
  return spec;
}

std::vector<FlowTrajectory> simulate_ensemble(const IncompressibleConfig& cfg,
                                              const TorusField& u0, int paths) {
  std::vector<FlowTrajectory> out(static_cast<std::size_t>(paths));
  parallel_for(paths, [&](int i) {
    IncompressibleConfig c = cfg;
    c.seed = derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(i));
    out[static_cast<std::size_t>(i)] = simulate_incompressible(c, u0);
  });
  return out;
}

MonitorResult lyapunov_monitor(const std::vector<FlowTrajectory>& paths, const DniSpec& spec,
                               double u0_weak_norm, int bootstrap_reps, std::uint64_t seed) {
  MonitorResult res;
  if (paths.empty()) {
    res.failure = "empty ensemble";
    res.d1_pass = res.d2_pass = res.d2_monotone = res.d3_pass = false;
    return res;
  }
  const std::size_t nt = paths.front().samples.size();
  for (std::size_t i = 0; i < paths.size(); ++i) {
    if (!paths[i].completed || paths[i].samples.size() != nt) {
      res.failure = "path " + std::to_string(i) + " incomplete: " + paths[i].stop_reason;
      res.d1_pass = res.d2_pass = res.d2_monotone = res.d3_pass = false;
      return res;
    }
  }
  const int np = static_cast<int>(paths.size());
  const double x0 = u0_weak_norm * u0_weak_norm;
  const double V0 = lyap_V(spec.V, x0);
  // per path series
  std::vector<std::vector<double>> V(nt, std::vector<double>(np)), D(nt, std::vector<double>(np));
  for (int j = 0; j < np; ++j)
    for (std::size_t k = 0; k < nt; ++k) {
      const auto& s = paths[static_cast<std::size_t>(j)].samples[k];
      V[k][static_cast<std::size_t>(j)] = lyap_V(spec.V, s.htheta * s.htheta);
      D[k][static_cast<std::size_t>(j)] = lyap_V(spec.V, s.wp * s.wp / (spec.M * spec.M));
    }
  std::vector<double> times(nt);
  for (std::size_t k = 0; k < nt; ++k) times[k] = paths.front().samples[k].time;

  auto rhs3 = [&](double t) {
    return spec.G3 > 0 ? V0 / spec.G3 * (1 - std::exp(-spec.G3 * t)) : V0 * t;
  };
  // family-wise 95%: one-sided Bonferroni over the checked times
  const double z = nt > 1 ? boost::math::quantile(boost::math::normal(),
                                                  1.0 - 0.05 / static_cast<double>(nt - 1))
                          : kZ95;
  res.z = z;
  double cum = 0;
  std::vector<double> prev_mean_D;
  for (std::size_t k = 0; k < nt; ++k) {
    const MeanSe mv = mean_se(V[k]);
    const MeanSe md = mean_se(D[k]);
    if (k > 0) cum += 0.5 * (times[k] - times[k - 1]) * (md.mean + prev_mean_D[0]);
    prev_mean_D = {md.mean};
    MonitorRow r;
    r.time = times[k];
    r.mean_V = mv.mean;
    r.se_V = mv.se;
    r.bound_D1 = (V0 + spec.G2 * times[k]) * std::exp(spec.G1 * times[k]);
    r.bound_D2 = V0;
    r.cum_decay_lhs = cum;
    r.cum_decay_rhs = rhs3(times[k]);
    r.n_paths = np;
    res.rows.push_back(r);
    const double low = mv.mean - z * mv.se;
    const double slack = 1e-12 * std::max(1.0, V0);
    if (low > r.bound_D1 + slack && res.d1_pass) {
      res.d1_pass = false;
      res.failure += "D1 bound exceeded at t=" + std::to_string(times[k]) + "; ";
    }
    if (low > r.bound_D2 + slack && res.d2_pass) {
      res.d2_pass = false;
      res.failure += "D2 bound exceeded at t=" + std::to_string(times[k]) + "; ";
    }
    if (k > 0) {
      std::vector<double> diff(static_cast<std::size_t>(np));
      for (int j = 0; j < np; ++j)
        diff[static_cast<std::size_t>(j)] =
            V[k][static_cast<std::size_t>(j)] - V[k - 1][static_cast<std::size_t>(j)];
      const MeanSe dd = mean_se(diff);
      if (dd.mean - z * dd.se > slack && res.d2_monotone) {
        res.d2_monotone = false;
        res.failure += "monitor increased at t=" + std::to_string(times[k]) + "; ";
      }
    }
  }

  // bootstrap over paths for the cumulative decay inequality
  auto violated = [&](const std::vector<int>& idx) {
    double c = 0, prev = 0;
    for (std::size_t k = 0; k < nt; ++k) {
      double m = 0;
      for (int j : idx) m += D[k][static_cast<std::size_t>(j)];
      m /= static_cast<double>(idx.size());
      if (k > 0) c += 0.5 * (times[k] - times[k - 1]) * (m + prev);
      prev = m;
      if (c > rhs3(times[k]) * (1 + 1e-12)) return 1.0;
    }
    return 0.0;
  };
  const auto draws = bootstrap(np, bootstrap_reps, seed, violated);
  double frac = 0;
  for (double v : draws) frac += v;
  res.d3_violation_fraction = draws.empty() ? 0 : frac / static_cast<double>(draws.size());
  res.d3_pass = res.d3_violation_fraction <= 0.05;
  if (!res.d3_pass) res.failure += "decay integral violated in bootstrap resamples; ";
  return res;
}

std::string monitor_csv(const MonitorResult& m) {
  std::ostringstream os;
  os.precision(12);
  os << "time,mean_V,bound_D1,bound_D2,cum_decay_lhs,cum_decay_rhs,n_paths\n";
  for (const auto& r : m.rows)
    os << r.time << ',' << r.mean_V << ',' << r.bound_D1 << ',' << r.bound_D2 << ','
       << r.cum_decay_lhs << ',' << r.cum_decay_rhs << ',' << r.n_paths << '\n';
  return os.str();
}

GronwallReport gronwall_verify(const std::vector<double>& t, const std::vector<double>& f1,
                               const std::vector<double>& f2, const std::vector<double>& q,
                               double tol) {
  GronwallReport rep;
  const std::size_t n = t.size();
  if (n < 2 || f1.size() != n || f2.size() != n || q.size() != n) {
    rep.preconditions = rep.holds = false;
    rep.note = "series lengths differ or fewer than two samples";
    return rep;
  }
  double scale = 0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max({scale, std::abs(f1[i]), std::abs(q[i] * f2[i])});
  const double ptol = tol * std::max(1.0, scale);
  for (std::size_t i = 0; i < n; ++i) {
    if (f2[i] > f1[i] + ptol || q[i] < 0) {
      rep.preconditions = false;
      rep.note = "f2 <= f1 or q >= 0 fails at t=" + std::to_string(t[i]);
      break;
    }
    if (i + 1 < n) {
      const double h = t[i + 1] - t[i];
      const double slope = (f1[i + 1] - f1[i]) / h;
      const double bound = -0.5 * (q[i] * f2[i] + q[i + 1] * f2[i + 1]);
      if (slope > bound + ptol) {
        rep.preconditions = false;
        rep.note = "f1' <= -q f2 fails near t=" + std::to_string(t[i]);
        break;
      }
    }
  }
  double lhs = 0, iq = 0;
  rep.worst_slack = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) {
      const double h = t[i] - t[i - 1];
      lhs += 0.5 * h * (q[i] * f2[i] + q[i - 1] * f2[i - 1]);
      iq += 0.5 * h * (q[i] + q[i - 1]);
    }
    const double rhs = f1[0] * (1 - std::exp(-iq));
    rep.worst_slack = std::min(rep.worst_slack, rhs - lhs);
    rep.equality_gap = std::max(rep.equality_gap, std::abs(rhs - lhs));
  }
  rep.holds = rep.worst_slack >= -tol * std::max(1.0, std::abs(f1[0]));
  if (!rep.holds && rep.note.empty()) rep.note = "integral inequality fails";
  return rep;
}

GronwallTriple generate_gronwall_triple(std::mt19937_64& rng, double T, double dt) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const double q0 = 0.2 + 2 * U(rng), q1 = 0.9 * q0 * U(rng), w1 = 0.5 + 4 * U(rng);
  const double r0 = 0.6 + 0.3 * U(rng), r1 = 0.35 * U(rng), w2 = 0.5 + 4 * U(rng);
  const double s0 = 0.05 * U(rng), f0 = 0.1 + 5 * U(rng);
  auto q = [&](double t) { return q0 + q1 * std::sin(w1 * t); };
  auto r = [&](double t) { return std::min(1.0, r0 + r1 * std::cos(w2 * t)); };
  GronwallTriple g;
  const int n = static_cast<int>(std::lround(T / dt));
  double expo = 0;  // int_0^t (q r + s0), Gauss-Legendre on each cell
  static const double gx[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
  static const double gw[3] = {5.0 / 9, 8.0 / 9, 5.0 / 9};
  for (int i = 0; i <= n; ++i) {
    const double t = i * dt;
    if (i > 0) {
      const double a = t - dt;
      for (int k = 0; k < 3; ++k) {
        const double x = a + 0.5 * dt * (1 + gx[k]);
        expo += 0.5 * dt * gw[k] * (q(x) * r(x) + s0);
      }
    }
    const double f1 = f0 * std::exp(-expo);
    g.t.push_back(t);
    g.f1.push_back(f1);
    g.f2.push_back(r(t) * f1);
    g.q.push_back(q(t));
  }
  return g;
}

}  // namespace sevl
