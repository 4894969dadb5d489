#include "sevl/noise.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace sevl {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

NoisePath NoisePath::generate(double T, int fine_steps, const LevyMeasure& nu, std::uint64_t seed,
                              bool brownian) {
  if (!(T > 0) || fine_steps < 1) throw std::invalid_argument("noise path needs T>0, steps>=1");
  NoisePath p;
  p.T_ = T;
  const double dt = T / fine_steps;
  std::mt19937_64 rng(derive_seed(seed, 0));
  std::normal_distribution<double> z(0.0, 1.0);
  p.dW_.resize(static_cast<std::size_t>(fine_steps));
  p.dWt_.resize(static_cast<std::size_t>(fine_steps));
  const double sd = std::sqrt(dt);
  for (int i = 0; i < fine_steps; ++i) {
    p.dW_[static_cast<std::size_t>(i)] = brownian ? sd * z(rng) : 0.0;
    p.dWt_[static_cast<std::size_t>(i)] = brownian ? sd * z(rng) : 0.0;
  }
  LevyDriver drv(nu, derive_seed(seed, 1));
  p.jumps_ = drv.sample_jumps(0.0, T);
  return p;
}

Increments NoisePath::coarse(int k, int factor) const {
  Increments inc;
  const int n = fine_steps();
  if (factor < 1 || n % factor != 0) throw std::invalid_argument("level factor must divide steps");
  const int a = k * factor, b = a + factor;
  if (k < 0 || b > n) throw std::out_of_range("coarse step outside the path");
  for (int i = a; i < b; ++i) {
    inc.dW += dW_[static_cast<std::size_t>(i)];
    inc.dWt += dWt_[static_cast<std::size_t>(i)];
  }
  const double dt = T_ / n;
  const double t0 = a * dt, t1 = b * dt;
  for (const auto& j : jumps_)
    if (j.time >= t0 && (j.time < t1 || (b == n && j.time <= t1))) inc.jumps.push_back(j.l);
  return inc;
}

TorusField ItoCoefficient::eval(double t, const TorusField& u) const {
  const double tf = time_factor ? time_factor(t) : 1.0;
  switch (kind) {
    case Kind::None: return TorusField(u.grid(), u.components());
    case Kind::Linear: return (amplitude * tf) * u;
    case Kind::Additive: {
      if (!direction.same_shape(u)) throw std::invalid_argument("additive direction shape");
      return (amplitude * tf) * direction;
    }
    case Kind::Saturating: {
      const double x = wpinf_norm(1, u) / embedding_M;
      return (amplitude * tf * std::sqrt(1.0 + x)) * u;
    }
  }
  return TorusField(u.grid(), u.components());
}

std::string ItoCoefficient::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::None: os << "none"; break;
    case Kind::Linear: os << "linear(g=" << amplitude << ")"; break;
    case Kind::Additive: os << "additive(eps=" << amplitude << ")"; break;
    case Kind::Saturating: os << "saturating(g0=" << amplitude << ",M=" << embedding_M << ")"; break;
  }
  return os.str();
}

}  // namespace sevl
