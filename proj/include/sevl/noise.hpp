/// @file noise.hpp
/// @brief Brownian/jump increments shared between time-step levels, and Ito coefficients.
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sevl/levy.hpp"
#include "sevl/spectral.hpp"

namespace sevl {

/// Increments seen by one time step.
struct Increments {
  double dW = 0;        // drives the Stratonovich operator
  double dWt = 0;       // drives the Ito forcing
  std::vector<double> jumps;  // sizes, in time order
};

/// Finest-level increments over [0, T] plus the jump list; coarser levels sum blocks,
/// so every level sees the same Brownian and jump path.
class NoisePath {
 public:
  NoisePath() = default;
  static NoisePath generate(double T, int fine_steps, const LevyMeasure& nu, std::uint64_t seed,
                            bool brownian = true);

  int fine_steps() const { return static_cast<int>(dW_.size()); }
  double horizon() const { return T_; }
  /// Increments of coarse step k when the fine path is grouped by `factor`.
  Increments coarse(int k, int factor) const;
  const std::vector<Jump>& jumps() const { return jumps_; }

 private:
  double T_ = 0;
  std::vector<double> dW_, dWt_;
  std::vector<Jump> jumps_;
};

/// splitmix64 child seed: stream i of master seed s.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// Ito forcing coefficient acting on the velocity.
struct ItoCoefficient {
  enum class Kind { None, Linear, Additive, Saturating };
  Kind kind = Kind::None;
  double amplitude = 0;      // g (Linear), eps (Additive), g0 (Saturating)
  double embedding_M = 1;    // Saturating: argument |u|_{W^{1,inf}} / M
  TorusField direction;      // Additive only
  std::function<double(double)> time_factor;  // optional bounded g(t) multiplier

  TorusField eval(double t, const TorusField& u) const;
  bool active() const { return kind != Kind::None && amplitude != 0.0; }
  std::string describe() const;
};

}  // namespace sevl
