#include "sevl/ergodic.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string_view>

#include "sevl/parallel.hpp"

namespace sevl {

std::vector<Observable> standard_observables(int d, double theta, double s) {
  std::vector<Observable> out;
  for (int axis = 0; axis < d; ++axis) {
    Wavenumber k{0, 0, 0};
    k[static_cast<std::size_t>(axis)] = 1;
    const std::string tag = "k" + std::to_string(axis + 1);
    // transverse component: the longitudinal one vanishes on divergence-free fields
    auto comp = [axis](const TorusField& u) {
      return u.components() > 1 ? (axis + 1) % u.components() : 0;
    };
    out.push_back({"re_" + tag, [k, comp](const TorusField& u) {
                     return u.at(comp(u), u.grid()->index_of(k)).real();
                   }});
    out.push_back({"im_" + tag, [k, comp](const TorusField& u) {
                     return u.at(comp(u), u.grid()->index_of(k)).imag();
                   }});
  }
  out.push_back({"norm_theta", [theta](const TorusField& u) { return sobolev_norm(theta, u); }});
  out.push_back({"norm_s", [s](const TorusField& u) { return sobolev_norm(s, u); }});
  return out;
}

int observable_index(const std::vector<std::string>& names, const std::string& name) {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw std::invalid_argument("unknown observable " + name);
  return static_cast<int>(it - names.begin());
}

std::string field_digest(const TorusField& f) {
  const auto& raw = f.raw();
  const std::string_view bytes(reinterpret_cast<const char*>(raw.data()), raw.size() * sizeof(cplx));
  std::ostringstream os;
  os << std::hex << std::hash<std::string_view>{}(bytes) << "-" << f.components() << "x"
     << f.modes();
  return os.str();
}

OccupationRun occupation_run(const IncompressibleConfig& cfg, const TorusField& u0,
                             const std::vector<Observable>& obs, double T, double cadence,
                             int paths) {
  if (!(cadence > 0) || !(T >= cadence)) throw std::invalid_argument("need 0 < cadence <= T");
  const int per = static_cast<int>(std::lround(cadence / cfg.dt));
  if (per < 1 || std::abs(per * cfg.dt - cadence) > 1e-9 * cadence)
    throw std::invalid_argument("cadence must be a multiple of dt");
  const int nsamp = static_cast<int>(std::lround(T / cadence));
  OccupationRun run;
  for (const auto& o : obs) run.names.push_back(o.name);
  run.x0_digest = field_digest(u0);
  run.cadence = cadence;
  run.T = nsamp * cadence;
  run.paths.resize(static_cast<std::size_t>(paths));

  parallel_for(paths, [&](int p) {
    IncompressibleConfig c = cfg;
    c.seed = derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(p));
    c.T = run.T;
    const int steps = nsamp * per;
    const bool brownian = c.Q1.has_value() || c.h.active();
    const NoisePath path =
        NoisePath::generate(c.T, steps, c.Q2 ? c.nu : LevyMeasure::none(), c.seed, brownian);
    const IncompressibleScheme sch(c);
    PathSeries& ps = run.paths[static_cast<std::size_t>(p)];
    ps.values.assign(obs.size(), {});
    TorusField u = u0;
    for (int k = 0; k < steps; ++k) {
      try {
        u = sch.step(u, k * c.dt, path.coarse(k, 1), c.dt);
      } catch (const std::runtime_error& e) {
        ps.completed = false;
        ps.stop_reason = e.what();
        return;
      }
      // keep decayed paths out of the subnormal range
      if (sobolev_norm(0.0, u) < 1e-250) u = TorusField(u.grid(), u.components());
      if ((k + 1) % per == 0) {
        ps.times.push_back((k + 1) * c.dt);
        for (std::size_t i = 0; i < obs.size(); ++i) ps.values[i].push_back(obs[i].eval(u));
      }
    }
  });
  return run;
}

Histogram OccupationMeasure::histogram(int obs, int bins, double lo, double hi) const {
  Histogram h;
  h.lo = lo;
  h.hi = hi;
  h.mass.assign(static_cast<std::size_t>(bins), 0.0);
  const auto& x = samples.at(static_cast<std::size_t>(obs));
  if (x.empty()) return h;
  const double w = 1.0 / static_cast<double>(x.size());
  for (double v : x) {
    int b = hi > lo ? static_cast<int>(std::floor((v - lo) / (hi - lo) * bins)) : 0;
    b = std::clamp(b, 0, bins - 1);
    h.mass[static_cast<std::size_t>(b)] += w;
  }
  return h;
}

Histogram OccupationMeasure::histogram(int obs, int bins) const {
  const auto& x = samples.at(static_cast<std::size_t>(obs));
  if (x.empty()) return histogram(obs, bins, 0.0, 1.0);
  const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
  double lo = *mn, hi = *mx;
  if (hi <= lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  return histogram(obs, bins, lo, hi);
}

OccupationMeasure accumulate(const OccupationRun& run, double T) {
  OccupationMeasure mu;
  mu.names = run.names;
  mu.T = T;
  mu.x0_digest = run.x0_digest;
  mu.samples.assign(run.names.size(), {});
  for (const auto& p : run.paths) {
    if (!p.completed) throw std::runtime_error("incomplete path in ensemble: " + p.stop_reason);
    ++mu.paths;
    for (std::size_t k = 0; k < p.times.size(); ++k) {
      if (p.times[k] > T * (1 + 1e-12)) break;
      for (std::size_t i = 0; i < run.names.size(); ++i) mu.samples[i].push_back(p.values[i][k]);
    }
  }
  return mu;
}

OccupationMeasure merge(const OccupationMeasure& a, const OccupationMeasure& b) {
  if (a.names != b.names) throw std::invalid_argument("observables differ");
  if (a.x0_digest != b.x0_digest || a.T != b.T)
    throw std::invalid_argument("inconsistent configs: initial condition or horizon differ");
  OccupationMeasure m = a;
  m.paths += b.paths;
  for (std::size_t i = 0; i < m.samples.size(); ++i)
    m.samples[i].insert(m.samples[i].end(), b.samples[i].begin(), b.samples[i].end());
  return m;
}

std::vector<double> stabilization_diagnostic(const OccupationMeasure& a,
                                             const OccupationMeasure& b, int bins) {
  if (a.names != b.names) throw std::invalid_argument("observables differ");
  std::vector<double> out;
  for (std::size_t i = 0; i < a.names.size(); ++i) {
    const auto& x = a.samples[i];
    const auto& y = b.samples[i];
    if (x.empty() || y.empty()) {
      out.push_back(0);
      continue;
    }
    double lo = std::min(*std::min_element(x.begin(), x.end()), *std::min_element(y.begin(), y.end()));
    double hi = std::max(*std::max_element(x.begin(), x.end()), *std::max_element(y.begin(), y.end()));
    if (hi <= lo) {
      out.push_back(0);
      continue;
    }
    const Histogram ha = a.histogram(static_cast<int>(i), bins, lo, hi);
    const Histogram hb = b.histogram(static_cast<int>(i), bins, lo, hi);
    const double dx = (hi - lo) / bins;
    double fa = 0, fb = 0, acc = 0;
    for (int k = 0; k < bins; ++k) {
      fa += ha.mass[static_cast<std::size_t>(k)];
      fb += hb.mass[static_cast<std::size_t>(k)];
      acc += (fa - fb) * (fa - fb) * dx;
    }
    out.push_back(acc);
  }
  return out;
}

std::vector<TailRow> tightness_diagnostic(const OccupationMeasure& mu, int obs,
                                          const std::vector<double>& R_grid, VKind V) {
  const auto& x = mu.samples.at(static_cast<std::size_t>(obs));
  double mv = 0;
  for (double v : x) mv += lyap_V(V, v * v);
  if (!x.empty()) mv /= static_cast<double>(x.size());
  std::vector<TailRow> rows;
  for (double R : R_grid) {
    TailRow r;
    r.R = R;
    r.mean_V = mv;
    std::size_t over = 0;
    for (double v : x) over += v * v > R;
    r.tail = x.empty() ? 0 : static_cast<double>(over) / static_cast<double>(x.size());
    const double vr = lyap_V(V, R);
    r.envelope = vr > 0 ? 2 * mv / vr : std::numeric_limits<double>::infinity();
    rows.push_back(r);
  }
  return rows;
}

std::string histogram_csv(const Histogram& h) {
  std::ostringstream os;
  os.precision(12);
  os << "bin_left,bin_right,mass\n";
  const int n = static_cast<int>(h.mass.size());
  for (int k = 0; k < n; ++k) {
    const double a = h.lo + (h.hi - h.lo) * k / n, b = h.lo + (h.hi - h.lo) * (k + 1) / n;
    os << a << ',' << b << ',' << h.mass[static_cast<std::size_t>(k)] << '\n';
  }
  return os.str();
}

}  // namespace sevl
