/// @file psdo.hpp
/// @brief Noise-amplitude operators: frequency multipliers, x-dependent transport, Riesz-type.
#pragma once

#include <Eigen/Dense>

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "sevl/spectral.hpp"

namespace sevl {

enum class OpKind { FreqOnly, XDependent, Mikhlin };
std::string to_string(OpKind k);

/// m x m symbol evaluated at a (real) frequency vector.
using MatrixSymbol = std::function<Eigen::MatrixXcd(const std::array<double, 3>& k)>;
using ScalarSymbol = std::function<cplx(const std::array<double, 3>& k)>;

class PsdoOperator {
 public:
  /// Scalar multiplier acting identically on each of `m` components.
  static PsdoOperator scalar_multiplier(int d, int m, ScalarSymbol p, double order, OpKind kind,
                                        bool skew_exact, std::string label);
  static PsdoOperator matrix_multiplier(int d, int m, MatrixSymbol p, double order,
                                        bool skew_exact, std::string label);
  /// sum_i coeff_i(x) d_i (I-Delta)^bessel on every component, plus optional zero-order
  /// pointwise matrix `zero_order` (m*m scalar fields, row-major).
  static PsdoOperator transport(std::vector<TorusField> coeff, int m, double bessel,
                                std::vector<TorusField> zero_order = {});

  OpKind kind() const { return kind_; }
  double order() const { return order_; }
  bool skew_exact() const { return skew_; }
  int components() const { return m_; }
  int dim() const { return d_; }
  const std::vector<int>& mollify_levels() const { return levels_; }
  const std::string& label() const { return label_; }
  bool is_scalar() const { return static_cast<bool>(scalar_); }

  TorusField apply(const TorusField& f) const;
  /// Symbol value (scalar ops only), including mollifier factors.
  cplx scalar_symbol_at(const TorusGrid& g, std::size_t idx) const;
  /// Full m x m symbol at a mode, including mollifier factors (multiplier kinds only).
  Eigen::MatrixXcd symbol_at(const TorusGrid& g, std::size_t idx) const;

  /// J_n Q J_n.
  PsdoOperator renormalized(int n) const;
  /// Same operator scaled by a real factor.
  PsdoOperator scaled(double a) const;

 private:
  PsdoOperator() = default;
  const std::vector<cplx>& scalar_table(const TorusGrid& g) const;
  TorusField apply_transport(const TorusField& f) const;
  double mollifier_factor(const TorusGrid& g, std::size_t idx) const;

  OpKind kind_ = OpKind::FreqOnly;
  double order_ = 0;
  bool skew_ = false;
  int d_ = 1;
  int m_ = 1;
  double scale_ = 1.0;
  std::string label_;
  std::vector<int> levels_;
  ScalarSymbol scalar_;
  MatrixSymbol matrix_;
  // transport data
  std::vector<TorusField> coeff_;
  std::vector<std::vector<cplx>> coeff_values_;
  std::vector<std::vector<cplx>> zero_values_;
  double bessel_ = 0;

  struct Cache {
    std::mutex mu;
    std::map<const TorusGrid*, std::vector<cplx>> tables;
  };
  std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

// --- builders ---
/// sum_i c_i d_i (I-Delta)^alpha with constant coefficients: FreqOnly, order 1+2 alpha.
PsdoOperator build_bessel_transport(const std::vector<double>& c, double alpha, int m);
/// Same with coefficient fields: XDependent, requires 1+2 alpha in [0,1].
PsdoOperator build_bessel_transport(const std::vector<TorusField>& c, double alpha, int m);
/// sum_i c_i (-i k_i/|k|) |k|^varsigma, zero at k=0.
PsdoOperator build_fractional_riesz(const std::vector<double>& c, double varsigma, int m);
/// (I-Delta)^{s/2}: self-adjoint, used as a negative control.
PsdoOperator build_bessel_power(int d, int m, double s);
PsdoOperator build_identity(int d, int m);
PsdoOperator build_zero(int d, int m);

// --- probes and oracles ---
struct CancellationReport {
  std::string kind;
  double order = 0;
  double s = 0;
  int n_max = 0;
  double c1_hat = 0;
  double c2_hat = 0;
  int samples = 0;
  std::uint64_t seed = 0;
  std::string csv_row() const;
  static std::string csv_header();
};

/// Empirical sups of |<Qf,f>_s| and |<Q^2 f,f>_s + <Qf,Qf>_s| over unit random fields.
/// `band` <= 0 means N/4.
CancellationReport cancel_probe(const PsdoOperator& Q, GridPtr g, double s, int samples,
                                std::uint64_t seed, double band = -1);
/// One report per level n for the family {J_n Q J_n}. Fields are drawn inside the passband of
/// J_n (band min(N/4, 2n)); modes outside it only inflate the denominator.
std::vector<CancellationReport> cancel_probe_levels(const PsdoOperator& Q, GridPtr g, double s,
                                                    const std::vector<int>& levels, int samples,
                                                    std::uint64_t seed);
/// Max over a family of reports (uniformity in n).
CancellationReport combine_max(const std::vector<CancellationReport>& reports);

/// Basis used for dense matrices: all non-Nyquist modes, or the dealiased set only.
std::vector<std::size_t> dense_basis(const TorusGrid& g, bool dealiased_only);
/// Dense matrix of Q on the truncated Fourier basis (column = image of a basis vector).
Eigen::MatrixXcd dense_matrix(const PsdoOperator& Q, GridPtr g, bool dealiased_only = false);
/// Diagonal Bessel weights (1+|k|^2)^{s/2} over a dense basis (component-major).
Eigen::VectorXd dense_weights(const TorusGrid& g, const std::vector<std::size_t>& basis, int m,
                              double s);
/// Operator norm of A from H^s to H^theta.
double dense_operator_norm(const Eigen::MatrixXcd& A, const TorusGrid& g,
                           const std::vector<std::size_t>& basis, int m, double s, double theta);


struct RateStudy {
  std::string label;
  std::vector<int> levels;
  std::vector<double> norms;  // |A_n - A_{2n}| in L(H^s; H^theta)
  double slope = 0;           // least-squares log-log slope against n
  double expected = 0;
};
/// Friedrichs mollifier differences J_n - J_{2n}; expected slope -(s - theta).
RateStudy mollifier_rate(GridPtr g, double s, double theta, const std::vector<int>& levels);
/// Q_n - Q_{2n} (power 1) or Q_n^2 - Q_{2n}^2 (power 2) for Q_n = J_n Q J_n;
/// expected slope -(s - theta - power * order).
RateStudy renormalized_rate(const PsdoOperator& Q, GridPtr g, double s, double theta,
                            const std::vector<int>& levels, int power);

}  // namespace sevl
