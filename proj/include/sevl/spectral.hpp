/// @file spectral.hpp
/// @brief Torus grids, Fourier-stored fields and the multiplier toolbox built on them.
#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace sevl {

using cplx = std::complex<double>;
using Wavenumber = std::array<int, 3>;

/// Periodic lattice on [0,2pi)^d with N points per axis.
struct TorusGrid {
  int dim = 1;
  int n = 4;
  std::size_t size = 0;  // n^dim
  int cutoff = 1;        // dealias keeps |k_i| <= cutoff
  std::vector<Wavenumber> k;
  std::vector<double> k2;
  std::vector<unsigned char> keep;
  std::vector<unsigned char> nyquist;
  std::vector<std::size_t> mirror;  // index of -k

  std::size_t index_of(const Wavenumber& kk) const;
  double coord(std::size_t idx, int axis) const;
  std::size_t count_kept() const;
  /// (2pi)^d
  double volume() const;
};

using GridPtr = std::shared_ptr<const TorusGrid>;

/// Cached: the same (d, N) always returns the same grid object.
GridPtr make_grid(int d, int n);

/// Vector field with `m` components stored as Fourier coefficients
/// fhat(k) = int f e^{-ik.x} dx (so fhat = (2pi/N)^d * DFT).
class TorusField {
 public:
  TorusField() = default;
  TorusField(GridPtr g, int m);

  const GridPtr& grid() const { return grid_; }
  int components() const { return m_; }
  std::size_t modes() const { return grid_ ? grid_->size : 0; }

  cplx* hat(int c) { return data_.data() + static_cast<std::size_t>(c) * modes(); }
  const cplx* hat(int c) const { return data_.data() + static_cast<std::size_t>(c) * modes(); }
  cplx& at(int c, std::size_t idx) { return hat(c)[idx]; }
  cplx at(int c, std::size_t idx) const { return hat(c)[idx]; }
  std::vector<cplx>& raw() { return data_; }
  const std::vector<cplx>& raw() const { return data_; }

  /// Build from grid values (row-major, component-major blocks).
  static TorusField from_values(GridPtr g, int m, const std::vector<cplx>& values);
  static TorusField from_real(GridPtr g, int m, const std::vector<double>& values);
  /// f(x, out) fills `m` values at point x.
  static TorusField from_function(GridPtr g, int m,
                                  const std::function<void(const double* x, double* out)>& f);

  /// Grid values of one component (complex; real fields have ~0 imaginary part).
  std::vector<cplx> values(int c) const;
  std::vector<double> real_values(int c) const;
  /// Largest |Im| over the real-space view.
  double max_imag() const;

  TorusField component(int c) const;
  void set_component(int c, const TorusField& scalar);

  TorusField& operator+=(const TorusField& o);
  TorusField& operator-=(const TorusField& o);
  TorusField& operator*=(double a);
  TorusField& operator*=(cplx a);
  void axpy(cplx a, const TorusField& x);  // this += a*x
  void zero_nyquist();
  /// Hermitian symmetrization fhat(-k) = conj(fhat(k)).
  void symmetrize();
  bool same_shape(const TorusField& o) const;

 private:
  GridPtr grid_;
  int m_ = 0;
  std::vector<cplx> data_;
};

TorusField operator+(TorusField a, const TorusField& b);
TorusField operator-(TorusField a, const TorusField& b);
TorusField operator*(double a, TorusField b);

// --- transforms (in place on n^d arrays) ---
void forward_transform(const TorusGrid& g, std::vector<cplx>& values_to_hat);
void inverse_transform(const TorusGrid& g, std::vector<cplx>& hat_to_values);

// --- smooth cut-off functions ---
double smooth_step(double t);              // h(t): 0 for t<=0, 1 for t>=1
double bump(double y);                     // j(y) = h(2-|y|)
double cutoff_chi(double R, double x);     // h((2R-x)/R)

// --- multipliers and norms ---
TorusField bessel_potential(double s, const TorusField& f);
double sobolev_inner(double s, const TorusField& f, const TorusField& g);
double sobolev_norm(double s, const TorusField& f);
double wpinf_norm(int p, const TorusField& f);
TorusField derivative(const TorusField& f, int axis, int order = 1);
TorusField divergence(const TorusField& f);
TorusField gradient(const TorusField& scalar);
TorusField zero_mean(const TorusField& f);
TorusField leray_project(const TorusField& f);
TorusField mollify(int n, const TorusField& f);
/// Zero every mode outside the 2/3-rule mask.
TorusField dealias(const TorusField& f);
/// Pointwise product of two scalar fields, dealiased.
TorusField multiply(const TorusField& a, const TorusField& b);

/// Band-limited (|k| <= band) Gaussian field, Hermitian, normalised to unit H^s norm.
TorusField random_field(GridPtr g, int m, double s, double band, std::mt19937_64& rng,
                        bool zero_average = false);
/// Divergence-free zero-mean random field (d components), unit H^s norm.
TorusField random_solenoidal(GridPtr g, double s, double band, std::mt19937_64& rng);

/// Empirical sup of wpinf_norm(p,f)/sobolev_norm(sigma,f) over random fields.
double estimate_embedding_constant(GridPtr g, int m, int p, double sigma, int samples,
                                   std::mt19937_64& rng, bool solenoidal = false);

/// Snapshot writer: CSV of grid values, one file per component.
void write_snapshot_csv(const TorusField& f, double time, const std::string& stem);

}  // namespace sevl
