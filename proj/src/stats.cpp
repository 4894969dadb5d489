#include "sevl/stats.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace sevl {

MeanSe mean_se(const std::vector<double>& x) {
  MeanSe r;
  r.n = static_cast<int>(x.size());
  if (x.empty()) return r;
  double s = 0;
  for (double v : x) s += v;
  r.mean = s / r.n;
  if (r.n > 1) {
    double q = 0;
    for (double v : x) q += (v - r.mean) * (v - r.mean);
    r.se = std::sqrt(q / (r.n - 1) / r.n);
  }
  return r;
}

LineFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit needs >= 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) throw std::invalid_argument("degenerate abscissae");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
  return f;
}

LineFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) throw std::invalid_argument("log-log fit needs positive data");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return linear_fit(lx, ly);
}

std::vector<double> bootstrap(int n, int reps, std::uint64_t seed,
                              const std::function<double(const std::vector<int>&)>& stat) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(reps));
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int r = 0; r < reps; ++r) {
    for (auto& i : idx) i = pick(rng);
    out.push_back(stat(idx));
  }
  return out;
}

}  // namespace sevl
