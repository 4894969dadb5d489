/// @file levy.hpp
/// @brief Small-jump Levy measures and a reproducible jump sampler.
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace sevl {

enum class LevyKind { None, TwoPoint, TruncatedStable };

/// Levy measure on [-1,1].
/// TwoPoint: jumps +-l0, each at rate lambda/2.
/// TruncatedStable: density c|l|^{-1-a} on eps <= |l| <= 1 (jumps below eps are not simulated).
struct LevyMeasure {
  LevyKind kind = LevyKind::None;
  double l0 = 0.5;
  double rate = 4.0;
  double a = 0.5;
  double c = 1.0;
  double eps = 1e-2;

  static LevyMeasure none();
  static LevyMeasure two_point(double l0, double rate);
  static LevyMeasure truncated_stable(double a, double c, double eps = 1e-2);

  /// nu of the simulated set.
  double total_rate() const;
  /// int l^2 nu(dl) over the simulated set.
  double second_moment() const;
  /// int_{|l|<eps} l^2 nu(dl), the part folded into a drift.
  double small_jump_second_moment() const;
  /// int l nu(dl) (zero for the symmetric measures here).
  double first_moment() const;
  /// E|l| and E l^2 under the normalised jump-size law.
  double size_mean_abs() const;
  double size_mean_square() const;
  std::string describe() const;

  double sample_size(std::mt19937_64& rng) const;
};

struct Jump {
  double time = 0;
  double l = 0;
};

class LevyDriver {
 public:
  LevyDriver() = default;
  LevyDriver(LevyMeasure m, std::uint64_t seed) : measure_(m), rng_(seed) {}

  const LevyMeasure& measure() const { return measure_; }
  /// Poisson jump times in [t0, t1) with i.i.d. sizes; empty when t1 <= t0.
  std::vector<Jump> sample_jumps(double t0, double t1);

 private:
  LevyMeasure measure_;
  std::mt19937_64 rng_{0};
};

}  // namespace sevl
