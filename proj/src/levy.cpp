#include "sevl/levy.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sevl {

LevyMeasure LevyMeasure::none() { return LevyMeasure{}; }

LevyMeasure LevyMeasure::two_point(double l0, double rate) {
  if (!(l0 > 0 && l0 <= 1)) throw std::invalid_argument("two-point jump size must be in (0,1]");
  if (rate < 0) throw std::invalid_argument("jump rate must be >= 0");
  LevyMeasure m;
  m.kind = LevyKind::TwoPoint;
  m.l0 = l0;
  m.rate = rate;
  return m;
}

LevyMeasure LevyMeasure::truncated_stable(double a, double c, double eps) {
  if (!(a > 0 && a < 2)) throw std::invalid_argument("stable index must be in (0,2)");
  if (!(c > 0)) throw std::invalid_argument("stable intensity must be > 0");
  if (!(eps > 0 && eps < 1)) throw std::invalid_argument("inner cut-off must be in (0,1)");
  LevyMeasure m;
  m.kind = LevyKind::TruncatedStable;
  m.a = a;
  m.c = c;
  m.eps = eps;
  return m;
}

double LevyMeasure::total_rate() const {
  switch (kind) {
    case LevyKind::None: return 0;
    case LevyKind::TwoPoint: return rate;
    case LevyKind::TruncatedStable: return 2.0 * c / a * (std::pow(eps, -a) - 1.0);
  }
  return 0;
}

double LevyMeasure::second_moment() const {
  switch (kind) {
    case LevyKind::None: return 0;
    case LevyKind::TwoPoint: return rate * l0 * l0;
    case LevyKind::TruncatedStable: return 2.0 * c / (2.0 - a) * (1.0 - std::pow(eps, 2.0 - a));
  }
  return 0;
}

double LevyMeasure::small_jump_second_moment() const {
  if (kind != LevyKind::TruncatedStable) return 0;
  return 2.0 * c / (2.0 - a) * std::pow(eps, 2.0 - a);
}

double LevyMeasure::first_moment() const { return 0.0; }

double LevyMeasure::size_mean_abs() const {
  switch (kind) {
    case LevyKind::None: return 0;
    case LevyKind::TwoPoint: return l0;
    case LevyKind::TruncatedStable: {
      // int_eps^1 l * l^{-1-a} dl / int_eps^1 l^{-1-a} dl
      const double num = a == 1.0 ? -std::log(eps) : (1.0 - std::pow(eps, 1.0 - a)) / (1.0 - a);
      const double den = (std::pow(eps, -a) - 1.0) / a;
      return num / den;
    }
  }
  return 0;
}

double LevyMeasure::size_mean_square() const {
  const double r = total_rate();
  return r > 0 ? second_moment() / r : 0.0;
}

std::string LevyMeasure::describe() const {
  std::ostringstream os;
  switch (kind) {
    case LevyKind::None: os << "none"; break;
    case LevyKind::TwoPoint: os << "two-point(l0=" << l0 << ",rate=" << rate << ")"; break;
    case LevyKind::TruncatedStable:
      os << "truncated-stable(a=" << a << ",c=" << c << ",eps=" << eps << ")";
      break;
  }
  return os.str();
}

double LevyMeasure::sample_size(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double sign = u(rng) < 0.5 ? -1.0 : 1.0;
  switch (kind) {
    case LevyKind::None: return 0;
    case LevyKind::TwoPoint: return sign * l0;
    case LevyKind::TruncatedStable: {
      // inverse CDF of l^{-1-a} on [eps,1]
      const double top = std::pow(eps, -a);
      const double v = u(rng);
      return sign * std::pow(top - v * (top - 1.0), -1.0 / a);
    }
  }
  return 0;
}

std::vector<Jump> LevyDriver::sample_jumps(double t0, double t1) {
  std::vector<Jump> out;
  const double lam = measure_.total_rate();
  if (!(t1 > t0) || lam <= 0) return out;
  std::exponential_distribution<double> gap(lam);
  double t = t0 + gap(rng_);
  while (t < t1) {
    out.push_back({t, measure_.sample_size(rng_)});
    t += gap(rng_);
  }
  return out;
}

}  // namespace sevl
