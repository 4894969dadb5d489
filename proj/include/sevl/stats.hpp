/// @file stats.hpp
/// @brief Small statistics helpers: moments, least squares, bootstrap resampling.
#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace sevl {

struct MeanSe {
  double mean = 0;
  double se = 0;  // standard error of the mean
  int n = 0;
};
MeanSe mean_se(const std::vector<double>& x);

struct LineFit {
  double slope = 0;
  double intercept = 0;
  double r2 = 0;
};
LineFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);
/// Fit of log(y) against log(x).
LineFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y);

/// One-sided normal quantile used throughout (95%).
inline constexpr double kZ95 = 1.6448536269514722;

/// Resample row indices with replacement; calls stat(indices) `reps` times and returns results.
std::vector<double> bootstrap(int n, int reps, std::uint64_t seed,
                              const std::function<double(const std::vector<int>&)>& stat);

}  // namespace sevl
