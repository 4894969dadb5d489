#include "sevl/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>

namespace sevl {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct PlanPair {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
};

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

const PlanPair& plans_for(int d, int n) {
  static std::map<std::pair<int, int>, PlanPair> cache;
  std::lock_guard<std::mutex> lock(plan_mutex());
  auto key = std::make_pair(d, n);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  int dims[3] = {n, n, n};
  std::size_t sz = 1;
  for (int a = 0; a < d; ++a) sz *= static_cast<std::size_t>(n);
  auto* buf = fftw_alloc_complex(sz);
  PlanPair p;
  unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  p.fwd = fftw_plan_dft(d, dims, buf, buf, FFTW_FORWARD, flags);
  p.bwd = fftw_plan_dft(d, dims, buf, buf, FFTW_BACKWARD, flags);
  fftw_free(buf);
  return cache.emplace(key, p).first->second;
}

int wrap(int i, int n) { return i <= n / 2 ? i : i - n; }

}  // namespace

std::size_t TorusGrid::index_of(const Wavenumber& kk) const {
  std::size_t idx = 0;
  for (int a = 0; a < dim; ++a) {
    int i = ((kk[a] % n) + n) % n;
    idx = idx * static_cast<std::size_t>(n) + static_cast<std::size_t>(i);
  }
  return idx;
}

double TorusGrid::coord(std::size_t idx, int axis) const {
  std::size_t stride = 1;
  for (int a = dim - 1; a > axis; --a) stride *= static_cast<std::size_t>(n);
  auto i = (idx / stride) % static_cast<std::size_t>(n);
  return kTwoPi * static_cast<double>(i) / n;
}

std::size_t TorusGrid::count_kept() const {
  return static_cast<std::size_t>(std::count(keep.begin(), keep.end(), 1));
}

double TorusGrid::volume() const { return std::pow(kTwoPi, dim); }

GridPtr make_grid(int d, int n) {
  if (d < 1 || d > 3) throw std::invalid_argument("grid dimension must be 1, 2 or 3");
  if (n < 4 || n % 2 != 0) throw std::invalid_argument("modes per axis must be even and >= 4");
  static std::map<std::pair<int, int>, GridPtr> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(d, n);
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  auto g = std::make_shared<TorusGrid>();
  g->dim = d;
  g->n = n;
  g->cutoff = n / 3;
  g->size = 1;
  for (int a = 0; a < d; ++a) g->size *= static_cast<std::size_t>(n);
  g->k.resize(g->size);
  g->k2.resize(g->size);
  g->keep.resize(g->size);
  g->nyquist.resize(g->size);
  g->mirror.resize(g->size);
  for (std::size_t idx = 0; idx < g->size; ++idx) {
    Wavenumber kk{0, 0, 0};
    std::size_t rest = idx;
    for (int a = d - 1; a >= 0; --a) {
      kk[a] = wrap(static_cast<int>(rest % static_cast<std::size_t>(n)), n);
      rest /= static_cast<std::size_t>(n);
    }
    g->k[idx] = kk;
    bool nyq = false, kept = true;
    double s2 = 0;
    for (int a = 0; a < d; ++a) {
      s2 += double(kk[a]) * kk[a];
      if (kk[a] == n / 2) nyq = true;
      if (std::abs(kk[a]) > g->cutoff) kept = false;
    }
    g->k2[idx] = s2;
    g->nyquist[idx] = nyq;
    g->keep[idx] = kept && !nyq;
  }
  for (std::size_t idx = 0; idx < g->size; ++idx) {
    Wavenumber m{-g->k[idx][0], -g->k[idx][1], -g->k[idx][2]};
    g->mirror[idx] = g->index_of(m);
  }
  cache.emplace(key, g);
  return g;
}

void forward_transform(const TorusGrid& g, std::vector<cplx>& v) {
  const auto& p = plans_for(g.dim, g.n);
  auto* ptr = reinterpret_cast<fftw_complex*>(v.data());
  fftw_execute_dft(p.fwd, ptr, ptr);
  const double scale = std::pow(kTwoPi / g.n, g.dim);
  for (std::size_t i = 0; i < g.size; ++i) v[i] = g.nyquist[i] ? cplx{} : v[i] * scale;
}

void inverse_transform(const TorusGrid& g, std::vector<cplx>& v) {
  const auto& p = plans_for(g.dim, g.n);
  auto* ptr = reinterpret_cast<fftw_complex*>(v.data());
  fftw_execute_dft(p.bwd, ptr, ptr);
  const double scale = 1.0 / g.volume();
  for (auto& x : v) x *= scale;
}

// ---------------------------------------------------------------- TorusField

TorusField::TorusField(GridPtr g, int m) : grid_(std::move(g)), m_(m) {
  if (!grid_) throw std::invalid_argument("null grid");
  if (m < 1) throw std::invalid_argument("component count must be >= 1");
  data_.assign(static_cast<std::size_t>(m) * grid_->size, cplx{});
}

TorusField TorusField::from_values(GridPtr g, int m, const std::vector<cplx>& values) {
  TorusField f(g, m);
  if (values.size() != f.data_.size()) throw std::invalid_argument("value count mismatch");
  std::vector<cplx> buf(g->size);
  for (int c = 0; c < m; ++c) {
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(c * g->size), g->size, buf.begin());
    forward_transform(*g, buf);
    std::copy(buf.begin(), buf.end(), f.hat(c));
  }
  return f;
}

TorusField TorusField::from_real(GridPtr g, int m, const std::vector<double>& values) {
  std::vector<cplx> v(values.begin(), values.end());
  auto f = from_values(std::move(g), m, v);
  f.symmetrize();
  return f;
}

TorusField TorusField::from_function(GridPtr g, int m,
                                     const std::function<void(const double*, double*)>& fn) {
  std::vector<double> vals(static_cast<std::size_t>(m) * g->size);
  std::vector<double> out(static_cast<std::size_t>(m));
  double x[3] = {0, 0, 0};
  for (std::size_t idx = 0; idx < g->size; ++idx) {
    for (int a = 0; a < g->dim; ++a) x[a] = g->coord(idx, a);
    fn(x, out.data());
    for (int c = 0; c < m; ++c) vals[c * g->size + idx] = out[c];
  }
  return from_real(g, m, vals);
}

std::vector<cplx> TorusField::values(int c) const {
  std::vector<cplx> v(hat(c), hat(c) + modes());
  inverse_transform(*grid_, v);
  return v;
}

std::vector<double> TorusField::real_values(int c) const {
  auto v = values(c);
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) r[i] = v[i].real();
  return r;
}

double TorusField::max_imag() const {
  double mx = 0;
  for (int c = 0; c < m_; ++c)
    for (const auto& x : values(c)) mx = std::max(mx, std::abs(x.imag()));
  return mx;
}

TorusField TorusField::component(int c) const {
  TorusField s(grid_, 1);
  std::copy(hat(c), hat(c) + modes(), s.hat(0));
  return s;
}

void TorusField::set_component(int c, const TorusField& scalar) {
  if (scalar.grid_ != grid_) throw std::invalid_argument("grid mismatch");
  std::copy(scalar.hat(0), scalar.hat(0) + modes(), hat(c));
}

bool TorusField::same_shape(const TorusField& o) const { return grid_ == o.grid_ && m_ == o.m_; }

TorusField& TorusField::operator+=(const TorusField& o) {
  if (!same_shape(o)) throw std::invalid_argument("field shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}
TorusField& TorusField::operator-=(const TorusField& o) {
  if (!same_shape(o)) throw std::invalid_argument("field shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}
TorusField& TorusField::operator*=(double a) {
  for (auto& x : data_) x *= a;
  return *this;
}
TorusField& TorusField::operator*=(cplx a) {
  for (auto& x : data_) x *= a;
  return *this;
}
void TorusField::axpy(cplx a, const TorusField& x) {
  if (!same_shape(x)) throw std::invalid_argument("field shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += a * x.data_[i];
}

void TorusField::zero_nyquist() {
  for (int c = 0; c < m_; ++c)
    for (std::size_t i = 0; i < modes(); ++i)
      if (grid_->nyquist[i]) hat(c)[i] = 0;
}

void TorusField::symmetrize() {
  for (int c = 0; c < m_; ++c) {
    cplx* h = hat(c);
    for (std::size_t i = 0; i < modes(); ++i) {
      std::size_t j = grid_->mirror[i];
      if (j < i) continue;
      cplx avg = 0.5 * (h[i] + std::conj(h[j]));
      h[i] = avg;
      h[j] = std::conj(avg);
    }
  }
  zero_nyquist();
}

TorusField operator+(TorusField a, const TorusField& b) { return a += b; }
TorusField operator-(TorusField a, const TorusField& b) { return a -= b; }
TorusField operator*(double a, TorusField b) { return b *= a; }

// ---------------------------------------------------------------- cut-offs

double smooth_step(double t) {
  if (t <= 0) return 0.0;
  if (t >= 1) return 1.0;
  double a = std::exp(-1.0 / t);
  double b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

double bump(double y) { return smooth_step(2.0 - std::abs(y)); }

double cutoff_chi(double R, double x) { return smooth_step((2.0 * R - x) / R); }

// ---------------------------------------------------------------- multipliers

namespace {

template <class Fn>
TorusField scale_modes(const TorusField& f, Fn&& fn) {
  TorusField out = f;
  const auto& g = *f.grid();
  for (int c = 0; c < f.components(); ++c) {
    cplx* h = out.hat(c);
    for (std::size_t i = 0; i < g.size; ++i) h[i] *= fn(i);
  }
  return out;
}

void require_same(const TorusField& f, const TorusField& g) {
  if (f.grid() != g.grid()) throw std::invalid_argument("grid mismatch");
  if (f.components() != g.components()) throw std::invalid_argument("component mismatch");
}

}  // namespace

TorusField bessel_potential(double s, const TorusField& f) {
  if (s == 0.0) return f;
  const auto& g = *f.grid();
  return scale_modes(f, [&](std::size_t i) { return std::pow(1.0 + g.k2[i], 0.5 * s); });
}

double sobolev_inner(double s, const TorusField& f, const TorusField& h) {
  require_same(f, h);
  const auto& g = *f.grid();
  std::vector<double> w(g.size);
  for (std::size_t i = 0; i < g.size; ++i) w[i] = s == 0.0 ? 1.0 : std::pow(1.0 + g.k2[i], s);
  double acc = 0;
  for (int c = 0; c < f.components(); ++c) {
    const cplx* a = f.hat(c);
    const cplx* b = h.hat(c);
    for (std::size_t i = 0; i < g.size; ++i) acc += w[i] * (a[i] * std::conj(b[i])).real();
  }
  return acc / g.volume();
}

double sobolev_norm(double s, const TorusField& f) {
  return std::sqrt(std::max(0.0, sobolev_inner(s, f, f)));
}

TorusField derivative(const TorusField& f, int axis, int order) {
  const auto& g = *f.grid();
  if (axis < 0 || axis >= g.dim) throw std::invalid_argument("axis out of range");
  cplx unit{0, 1};
  return scale_modes(f, [&](std::size_t i) {
    return std::pow(unit * double(g.k[i][axis]), order);
  });
}

double wpinf_norm(int p, const TorusField& f) {
  if (p < 0) throw std::invalid_argument("p must be >= 0");
  const auto& g = *f.grid();
  // enumerate multi-indices with |alpha|_1 <= p
  std::vector<std::array<int, 3>> alphas;
  for (int a0 = 0; a0 <= p; ++a0)
    for (int a1 = 0; a1 <= (g.dim > 1 ? p : 0); ++a1)
      for (int a2 = 0; a2 <= (g.dim > 2 ? p : 0); ++a2)
        if (a0 + a1 + a2 <= p) alphas.push_back({a0, a1, a2});
  double total = 0;
  cplx unit{0, 1};
  std::vector<cplx> buf(g.size);
  for (int c = 0; c < f.components(); ++c) {
    for (const auto& al : alphas) {
      const cplx* h = f.hat(c);
      for (std::size_t i = 0; i < g.size; ++i) {
        cplx m = 1.0;
        for (int a = 0; a < g.dim; ++a)
          if (al[a]) m *= std::pow(unit * double(g.k[i][a]), al[a]);
        buf[i] = h[i] * m;
      }
      inverse_transform(g, buf);
      double mx = 0;
      for (const auto& x : buf) mx = std::max(mx, std::abs(x));
      total += mx;
    }
  }
  return total;
}

TorusField divergence(const TorusField& f) {
  const auto& g = *f.grid();
  if (f.components() != g.dim) throw std::invalid_argument("divergence needs d components");
  TorusField out(f.grid(), 1);
  for (int a = 0; a < g.dim; ++a) {
    const cplx* h = f.hat(a);
    for (std::size_t i = 0; i < g.size; ++i) out.hat(0)[i] += cplx{0, double(g.k[i][a])} * h[i];
  }
  return out;
}

TorusField gradient(const TorusField& s) {
  const auto& g = *s.grid();
  if (s.components() != 1) throw std::invalid_argument("gradient needs a scalar field");
  TorusField out(s.grid(), g.dim);
  for (int a = 0; a < g.dim; ++a)
    for (std::size_t i = 0; i < g.size; ++i)
      out.hat(a)[i] = cplx{0, double(g.k[i][a])} * s.hat(0)[i];
  return out;
}

TorusField zero_mean(const TorusField& f) {
  TorusField out = f;
  for (int c = 0; c < f.components(); ++c) out.hat(c)[0] = 0;
  return out;
}

TorusField leray_project(const TorusField& f) {
  const auto& g = *f.grid();
  if (f.components() != g.dim) throw std::invalid_argument("leray projection needs d components");
  TorusField out(f.grid(), g.dim);
  const int d = g.dim;
  for (std::size_t i = 1; i < g.size; ++i) {
    if (g.nyquist[i]) continue;
    const double kk = g.k2[i];
    cplx kdot = 0;
    for (int a = 0; a < d; ++a) kdot += double(g.k[i][a]) * f.hat(a)[i];
    for (int a = 0; a < d; ++a) out.hat(a)[i] = f.hat(a)[i] - double(g.k[i][a]) * kdot / kk;
  }
  return out;
}

TorusField mollify(int n, const TorusField& f) {
  if (n < 1) throw std::invalid_argument("mollifier level must be >= 1");
  const auto& g = *f.grid();
  return scale_modes(f, [&](std::size_t i) { return bump(std::sqrt(g.k2[i]) / n); });
}

TorusField dealias(const TorusField& f) {
  const auto& g = *f.grid();
  return scale_modes(f, [&](std::size_t i) { return g.keep[i] ? 1.0 : 0.0; });
}

TorusField multiply(const TorusField& a, const TorusField& b) {
  if (a.grid() != b.grid()) throw std::invalid_argument("grid mismatch");
  if (a.components() != 1 || b.components() != 1)
    throw std::invalid_argument("multiply expects scalar fields");
  auto va = a.values(0);
  auto vb = b.values(0);
  for (std::size_t i = 0; i < va.size(); ++i) va[i] *= vb[i];
  forward_transform(*a.grid(), va);
  TorusField out(a.grid(), 1);
  const auto& g = *a.grid();
  for (std::size_t i = 0; i < g.size; ++i) out.hat(0)[i] = g.keep[i] ? va[i] : cplx{};
  return out;
}

TorusField random_field(GridPtr gp, int m, double s, double band, std::mt19937_64& rng,
                        bool zero_average) {
  std::normal_distribution<double> nd(0.0, 1.0);
  TorusField f(gp, m);
  const auto& g = *gp;
  for (int c = 0; c < m; ++c)
    for (std::size_t i = 0; i < g.size; ++i) {
      if (g.nyquist[i] || std::sqrt(g.k2[i]) > band) continue;
      if (zero_average && i == 0) continue;
      f.hat(c)[i] = cplx{nd(rng), nd(rng)};
    }
  f.symmetrize();
  double nrm = sobolev_norm(s, f);
  if (nrm > 0) f *= 1.0 / nrm;
  return f;
}

TorusField random_solenoidal(GridPtr gp, double s, double band, std::mt19937_64& rng) {
  if (gp->dim < 2) throw std::invalid_argument("solenoidal fields need d >= 2");
  auto f = leray_project(random_field(gp, gp->dim, s, band, rng, true));
  double nrm = sobolev_norm(s, f);
  if (nrm > 0) f *= 1.0 / nrm;
  return f;
}

double estimate_embedding_constant(GridPtr g, int m, int p, double sigma, int samples,
                                   std::mt19937_64& rng, bool solenoidal) {
  double mx = 0;
  for (int i = 0; i < samples; ++i) {
    auto f = solenoidal ? random_solenoidal(g, sigma, g->n / 4.0, rng)
                        : random_field(g, m, sigma, g->n / 4.0, rng);
    mx = std::max(mx, wpinf_norm(p, f) / sobolev_norm(sigma, f));
  }
  return mx;
}

void write_snapshot_csv(const TorusField& f, double time, const std::string& stem) {
  const auto& g = *f.grid();
  for (int c = 0; c < f.components(); ++c) {
    std::ofstream out(stem + "_c" + std::to_string(c) + ".csv");
    out << "d,N,components,time\n";
    out << g.dim << ',' << g.n << ',' << f.components() << ',' << time << '\n';
    auto v = f.real_values(c);
    out.precision(17);
    for (std::size_t i = 0; i < v.size(); ++i) out << v[i] << '\n';
  }
}

}  // namespace sevl
