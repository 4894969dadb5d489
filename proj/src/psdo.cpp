#include "sevl/psdo.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "sevl/stats.hpp"

namespace sevl {

std::string to_string(OpKind k) {
  switch (k) {
    case OpKind::FreqOnly: return "FreqOnly";
    case OpKind::XDependent: return "XDependent";
    case OpKind::Mikhlin: return "Mikhlin";
  }
  return "?";
}

namespace {

std::array<double, 3> freq(const TorusGrid& g, std::size_t idx) {
  return {double(g.k[idx][0]), double(g.k[idx][1]), double(g.k[idx][2])};
}

}  // namespace

PsdoOperator PsdoOperator::scalar_multiplier(int d, int m, ScalarSymbol p, double order,
                                             OpKind kind, bool skew_exact, std::string label) {
  if (kind == OpKind::XDependent) throw std::invalid_argument("multiplier cannot be XDependent");
  PsdoOperator q;
  q.kind_ = kind;
  q.order_ = order;
  q.skew_ = skew_exact;
  q.d_ = d;
  q.m_ = m;
  q.scalar_ = std::move(p);
  q.label_ = std::move(label);
  return q;
}

PsdoOperator PsdoOperator::matrix_multiplier(int d, int m, MatrixSymbol p, double order,
                                             bool skew_exact, std::string label) {
  PsdoOperator q;
  q.kind_ = OpKind::FreqOnly;
  q.order_ = order;
  q.skew_ = skew_exact;
  q.d_ = d;
  q.m_ = m;
  q.matrix_ = std::move(p);
  q.label_ = std::move(label);
  return q;
}

PsdoOperator PsdoOperator::transport(std::vector<TorusField> coeff, int m, double bessel,
                                     std::vector<TorusField> zero_order) {
  if (coeff.empty()) throw std::invalid_argument("transport needs coefficient fields");
  const auto grid = coeff.front().grid();
  const int d = grid->dim;
  if (static_cast<int>(coeff.size()) != d)
    throw std::invalid_argument("transport needs one coefficient field per axis");
  for (const auto& c : coeff)
    if (c.grid() != grid || c.components() != 1)
      throw std::invalid_argument("coefficients must be scalar fields on one grid");
  if (!zero_order.empty() && static_cast<int>(zero_order.size()) != m * m)
    throw std::invalid_argument("zero-order part needs m*m scalar fields");
  PsdoOperator q;
  q.kind_ = OpKind::XDependent;
  q.order_ = 1.0 + 2.0 * bessel;
  q.skew_ = false;
  q.d_ = d;
  q.m_ = m;
  q.bessel_ = bessel;
  q.label_ = "x-transport";
  for (const auto& c : coeff) q.coeff_values_.push_back(c.values(0));
  for (const auto& z : zero_order) {
    if (z.grid() != grid) throw std::invalid_argument("zero-order grid mismatch");
    q.zero_values_.push_back(z.values(0));
  }
  q.coeff_ = std::move(coeff);
  return q;
}

const std::vector<cplx>& PsdoOperator::scalar_table(const TorusGrid& g) const {
  std::lock_guard<std::mutex> lock(cache_->mu);
  auto it = cache_->tables.find(&g);
  if (it != cache_->tables.end()) return it->second;
  std::vector<cplx> t;
  if (scalar_) {
    t.resize(g.size);
    for (std::size_t i = 0; i < g.size; ++i) t[i] = g.nyquist[i] ? cplx{} : scalar_(freq(g, i));
  } else {
    const std::size_t mm = static_cast<std::size_t>(m_) * m_;
    t.resize(g.size * mm);
    for (std::size_t i = 0; i < g.size; ++i) {
      if (g.nyquist[i]) continue;
      Eigen::MatrixXcd p = matrix_(freq(g, i));
      for (int r = 0; r < m_; ++r)
        for (int c = 0; c < m_; ++c) t[i * mm + r * m_ + c] = p(r, c);
    }
  }
  return cache_->tables.emplace(&g, std::move(t)).first->second;
}

double PsdoOperator::mollifier_factor(const TorusGrid& g, std::size_t idx) const {
  double f = 1.0;
  const double kn = std::sqrt(g.k2[idx]);
  for (int n : levels_) {
    const double j = bump(kn / n);
    f *= j * j;
  }
  return f;
}

cplx PsdoOperator::scalar_symbol_at(const TorusGrid& g, std::size_t idx) const {
  if (!scalar_) throw std::logic_error("operator has no scalar symbol");
  return scale_ * mollifier_factor(g, idx) * scalar_table(g)[idx];
}

Eigen::MatrixXcd PsdoOperator::symbol_at(const TorusGrid& g, std::size_t idx) const {
  if (kind_ == OpKind::XDependent) throw std::logic_error("x-dependent operator has no symbol");
  Eigen::MatrixXcd p(m_, m_);
  const double f = scale_ * mollifier_factor(g, idx);
  if (scalar_) {
    p.setIdentity();
    p *= f * scalar_table(g)[idx];
    return p;
  }
  const auto& t = scalar_table(g);
  const std::size_t mm = static_cast<std::size_t>(m_) * m_;
  for (int r = 0; r < m_; ++r)
    for (int c = 0; c < m_; ++c) p(r, c) = f * t[idx * mm + r * m_ + c];
  return p;
}

TorusField PsdoOperator::apply(const TorusField& f) const {
  if (f.components() != m_) throw std::invalid_argument("operator/field component mismatch");
  if (f.grid()->dim != d_) throw std::invalid_argument("operator/field dimension mismatch");
  const auto& g = *f.grid();
  if (kind_ == OpKind::Mikhlin) {
    double scale = 0, mean = 0;
    for (int c = 0; c < m_; ++c) {
      mean = std::max(mean, std::abs(f.hat(c)[0]));
      for (std::size_t i = 0; i < g.size; ++i) scale = std::max(scale, std::abs(f.hat(c)[i]));
    }
    if (mean > 1e-12 * std::max(scale, 1e-300) && mean > 1e-300)
      throw std::invalid_argument("homogeneous operator needs a zero-average field");
  }
  if (kind_ == OpKind::XDependent) {
    TorusField x = f;
    for (int n : levels_) x = mollify(n, x);
    TorusField y = apply_transport(x);
    for (int n : levels_) y = mollify(n, y);
    if (scale_ != 1.0) y *= scale_;
    return y;
  }
  TorusField out(f.grid(), m_);
  const auto& t = scalar_table(g);
  std::vector<double> mf(g.size, 1.0);
  if (!levels_.empty())
    for (std::size_t i = 0; i < g.size; ++i) mf[i] = mollifier_factor(g, i);
  if (scalar_) {
    for (int c = 0; c < m_; ++c) {
      const cplx* a = f.hat(c);
      cplx* b = out.hat(c);
      for (std::size_t i = 0; i < g.size; ++i) b[i] = scale_ * mf[i] * t[i] * a[i];
    }
    return out;
  }
  const std::size_t mm = static_cast<std::size_t>(m_) * m_;
  for (std::size_t i = 0; i < g.size; ++i) {
    const double w = scale_ * mf[i];
    for (int r = 0; r < m_; ++r) {
      cplx acc = 0;
      for (int c = 0; c < m_; ++c) acc += t[i * mm + r * m_ + c] * f.hat(c)[i];
      out.hat(r)[i] = w * acc;
    }
  }
  return out;
}

TorusField PsdoOperator::apply_transport(const TorusField& f) const {
  if (f.grid() != coeff_.front().grid())
    throw std::invalid_argument("x-dependent operator applied on a foreign grid");
  const auto& g = *f.grid();
  TorusField out(f.grid(), m_);
  std::vector<cplx> acc(g.size), buf(g.size);
  std::vector<std::vector<cplx>> vals;
  if (!zero_values_.empty())
    for (int c = 0; c < m_; ++c) vals.push_back(f.values(c));
  for (int c = 0; c < m_; ++c) {
    std::fill(acc.begin(), acc.end(), cplx{});
    const cplx* h = f.hat(c);
    for (int a = 0; a < d_; ++a) {
      for (std::size_t i = 0; i < g.size; ++i) {
        const double w = bessel_ == 0.0 ? 1.0 : std::pow(1.0 + g.k2[i], bessel_);
        buf[i] = cplx{0, double(g.k[i][a])} * w * h[i];
      }
      inverse_transform(g, buf);
      const auto& cv = coeff_values_[a];
      for (std::size_t i = 0; i < g.size; ++i) acc[i] += cv[i] * buf[i];
    }
    for (int b = 0; b < static_cast<int>(vals.size()); ++b) {
      const auto& zv = zero_values_[static_cast<std::size_t>(c * m_ + b)];
      for (std::size_t i = 0; i < g.size; ++i) acc[i] += zv[i] * vals[b][i];
    }
    forward_transform(g, acc);
    for (std::size_t i = 0; i < g.size; ++i) out.hat(c)[i] = g.keep[i] ? acc[i] : cplx{};
  }
  return out;
}

PsdoOperator PsdoOperator::renormalized(int n) const {
  if (n < 1) throw std::invalid_argument("mollifier level must be >= 1");
  PsdoOperator q = *this;
  q.levels_.push_back(n);
  return q;
}

PsdoOperator PsdoOperator::scaled(double a) const {
  PsdoOperator q = *this;
  q.scale_ *= a;
  if (a != 1.0) q.label_ += "*" + std::to_string(a);
  return q;
}

// ---------------------------------------------------------------- builders

PsdoOperator build_bessel_transport(const std::vector<double>& c, double alpha, int m) {
  const int d = static_cast<int>(c.size());
  if (d < 1 || d > 3) throw std::invalid_argument("need 1..3 coefficients");
  const double order = 1.0 + 2.0 * alpha;
  if (order < 0) throw std::invalid_argument("transport order 1+2alpha must be >= 0");
  auto p = [c, alpha, d](const std::array<double, 3>& k) {
    double dot = 0, k2 = 0;
    for (int a = 0; a < d; ++a) {
      dot += c[a] * k[a];
      k2 += k[a] * k[a];
    }
    return cplx{0, dot * (alpha == 0.0 ? 1.0 : std::pow(1.0 + k2, alpha))};
  };
  return PsdoOperator::scalar_multiplier(d, m, p, order, OpKind::FreqOnly, true,
                                         "bessel-transport");
}

PsdoOperator build_bessel_transport(const std::vector<TorusField>& c, double alpha, int m) {
  const double order = 1.0 + 2.0 * alpha;
  if (order < -1e-12 || order > 1.0 + 1e-12)
    throw std::invalid_argument("x-dependent transport needs order 1+2alpha in [0,1]");
  return PsdoOperator::transport(c, m, alpha);
}

PsdoOperator build_fractional_riesz(const std::vector<double>& c, double varsigma, int m) {
  const int d = static_cast<int>(c.size());
  if (d < 1 || d > 3) throw std::invalid_argument("need 1..3 coefficients");
  if (varsigma < 0) throw std::invalid_argument("varsigma must be >= 0");
  auto p = [c, varsigma, d](const std::array<double, 3>& k) {
    double dot = 0, k2 = 0;
    for (int a = 0; a < d; ++a) {
      dot += c[a] * k[a];
      k2 += k[a] * k[a];
    }
    if (k2 == 0.0) return cplx{};
    const double kn = std::sqrt(k2);
    return cplx{0, -dot / kn * std::pow(kn, varsigma)};
  };
  return PsdoOperator::scalar_multiplier(d, m, p, varsigma, OpKind::Mikhlin, true,
                                         "fractional-riesz");
}

PsdoOperator build_bessel_power(int d, int m, double s) {
  auto p = [s](const std::array<double, 3>& k) {
    return cplx{std::pow(1.0 + k[0] * k[0] + k[1] * k[1] + k[2] * k[2], 0.5 * s), 0};
  };
  return PsdoOperator::scalar_multiplier(d, m, p, s, OpKind::FreqOnly, false, "bessel-power");
}

PsdoOperator build_identity(int d, int m) {
  return PsdoOperator::scalar_multiplier(
      d, m, [](const std::array<double, 3>&) { return cplx{1, 0}; }, 0, OpKind::FreqOnly, false,
      "identity");
}

PsdoOperator build_zero(int d, int m) {
  return PsdoOperator::scalar_multiplier(
      d, m, [](const std::array<double, 3>&) { return cplx{}; }, 0, OpKind::FreqOnly, true,
      "zero");
}

// ---------------------------------------------------------------- probes

std::string CancellationReport::csv_header() {
  return "kind,order,s,n_max,c1_hat,c2_hat,samples,seed";
}

std::string CancellationReport::csv_row() const {
  std::ostringstream os;
  os.precision(10);
  os << kind << ',' << order << ',' << s << ',' << n_max << ',' << c1_hat << ',' << c2_hat << ','
     << samples << ',' << seed;
  return os.str();
}

CancellationReport cancel_probe(const PsdoOperator& Q, GridPtr g, double s, int samples,
                                std::uint64_t seed, double band) {
  if (band <= 0) band = g->n / 4.0;
  std::mt19937_64 rng(seed);
  CancellationReport rep;
  rep.kind = to_string(Q.kind());
  rep.order = Q.order();
  rep.s = s;
  rep.samples = samples;
  rep.seed = seed;
  for (int n : Q.mollify_levels()) rep.n_max = std::max(rep.n_max, n);
  const bool zero_avg = Q.kind() == OpKind::Mikhlin;
  for (int i = 0; i < samples; ++i) {
    auto f = random_field(g, Q.components(), s, band, rng, zero_avg);
    const double nf = sobolev_inner(s, f, f);
    auto qf = Q.apply(f);
    auto qqf = Q.apply(qf);
    rep.c1_hat = std::max(rep.c1_hat, std::abs(sobolev_inner(s, qf, f)) / nf);
    rep.c2_hat =
        std::max(rep.c2_hat, std::abs(sobolev_inner(s, qqf, f) + sobolev_inner(s, qf, qf)) / nf);
  }
  return rep;
}

std::vector<CancellationReport> cancel_probe_levels(const PsdoOperator& Q, GridPtr g, double s,
                                                    const std::vector<int>& levels, int samples,
                                                    std::uint64_t seed) {
  std::vector<CancellationReport> out;
  for (int n : levels)
    out.push_back(cancel_probe(Q.renormalized(n), g, s, samples, seed,
                               std::min(g->n / 4.0, 2.0 * n)));
  return out;
}

CancellationReport combine_max(const std::vector<CancellationReport>& reports) {
  if (reports.empty()) return {};
  CancellationReport r = reports.front();
  for (const auto& x : reports) {
    r.c1_hat = std::max(r.c1_hat, x.c1_hat);
    r.c2_hat = std::max(r.c2_hat, x.c2_hat);
    r.n_max = std::max(r.n_max, x.n_max);
  }
  return r;
}

std::vector<std::size_t> dense_basis(const TorusGrid& g, bool dealiased_only) {
  std::vector<std::size_t> b;
  for (std::size_t i = 0; i < g.size; ++i) {
    if (g.nyquist[i]) continue;
    if (dealiased_only && !g.keep[i]) continue;
    b.push_back(i);
  }
  return b;
}

Eigen::MatrixXcd dense_matrix(const PsdoOperator& Q, GridPtr g, bool dealiased_only) {
  const auto basis = dense_basis(*g, dealiased_only);
  const int m = Q.components();
  const std::size_t dim = basis.size() * static_cast<std::size_t>(m);
  if (dim > 4096) throw std::invalid_argument("dense matrix exceeds 4096 rows");
  const auto nb = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dim),
                                              static_cast<Eigen::Index>(dim));
  if (Q.kind() != OpKind::XDependent) {
    for (Eigen::Index b = 0; b < nb; ++b) {
      auto p = Q.symbol_at(*g, basis[static_cast<std::size_t>(b)]);
      for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) A(r * nb + b, c * nb + b) = p(r, c);
    }
    return A;
  }
  for (int c = 0; c < m; ++c)
    for (Eigen::Index b = 0; b < nb; ++b) {
      TorusField e(g, m);
      e.hat(c)[basis[static_cast<std::size_t>(b)]] = 1.0;
      auto y = Q.apply(e);
      for (int r = 0; r < m; ++r)
        for (Eigen::Index bb = 0; bb < nb; ++bb)
          A(r * nb + bb, c * nb + b) = y.hat(r)[basis[static_cast<std::size_t>(bb)]];
    }
  return A;
}

Eigen::VectorXd dense_weights(const TorusGrid& g, const std::vector<std::size_t>& basis, int m,
                              double s) {
  const auto nb = static_cast<Eigen::Index>(basis.size());
  Eigen::VectorXd w(nb * m);
  for (int c = 0; c < m; ++c)
    for (Eigen::Index b = 0; b < nb; ++b)
      w(c * nb + b) = std::pow(1.0 + g.k2[basis[static_cast<std::size_t>(b)]], 0.5 * s);
  return w;
}

double dense_operator_norm(const Eigen::MatrixXcd& A, const TorusGrid& g,
                           const std::vector<std::size_t>& basis, int m, double s, double theta) {
  const Eigen::VectorXd wt = dense_weights(g, basis, m, theta);
  const Eigen::VectorXd ws = dense_weights(g, basis, m, s);
  Eigen::MatrixXcd B = wt.asDiagonal() * A * ws.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(B);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

namespace {
RateStudy fit_rate(RateStudy r) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < r.levels.size(); ++i) {
    x.push_back(r.levels[i]);
    y.push_back(r.norms[i]);
  }
  r.slope = loglog_fit(x, y).slope;
  return r;
}
}  // namespace

RateStudy mollifier_rate(GridPtr g, double s, double theta, const std::vector<int>& levels) {
  RateStudy r;
  r.label = "mollifier";
  r.levels = levels;
  r.expected = -(s - theta);
  const auto basis = dense_basis(*g, false);
  for (int n : levels) {
    auto J = [g](int lvl) {
      return PsdoOperator::scalar_multiplier(
          g->dim, 1,
          [lvl](const std::array<double, 3>& k) {
            return cplx{bump(std::sqrt(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) / lvl), 0.0};
          },
          0.0, OpKind::FreqOnly, false, "J");
    };
    const Eigen::MatrixXcd D = dense_matrix(J(n), g) - dense_matrix(J(2 * n), g);
    r.norms.push_back(dense_operator_norm(D, *g, basis, 1, s, theta));
  }
  return fit_rate(r);
}

RateStudy renormalized_rate(const PsdoOperator& Q, GridPtr g, double s, double theta,
                            const std::vector<int>& levels, int power) {
  if (power != 1 && power != 2) throw std::invalid_argument("power must be 1 or 2");
  RateStudy r;
  r.label = Q.label() + (power == 2 ? " squared" : "");
  r.levels = levels;
  r.expected = -(s - theta - power * Q.order());
  const auto basis = dense_basis(*g, false);
  for (int n : levels) {
    Eigen::MatrixXcd A = dense_matrix(Q.renormalized(n), g);
    Eigen::MatrixXcd B = dense_matrix(Q.renormalized(2 * n), g);
    if (power == 2) {
      A = (A * A).eval();
      B = (B * B).eval();
    }
    r.norms.push_back(dense_operator_norm(A - B, *g, basis, Q.components(), s, theta));
  }
  return fit_rate(r);
}

}  // namespace sevl
