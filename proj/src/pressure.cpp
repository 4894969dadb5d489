#include "sevl/pressure.hpp"

#include <cmath>
// pchip.hpp calls isnan unqualified
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace sevl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRhoStar = 1e-6;

double gk(const std::function<double(double)>& f, double a, double b) {
  if (a == b) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 12, 1e-13);
}

// r(rho) = vacuum(rho) below rho*, then cumulative GK15 in t = log rho (integrand sqrt P'(e^t)).
class QuadTable {
 public:
  QuadTable(RealFn sqrt_pp, RealFn vacuum, std::vector<double> breaks, double ref_rho)
      : sqrt_pp_(std::move(sqrt_pp)), vacuum_(std::move(vacuum)) {
    const double t0 = std::log(kRhoStar), t1 = std::log(1e12);
    std::vector<double> knots;
    for (double t = t0; t < t1; t += 0.25) knots.push_back(t);
    knots.push_back(t1);
    for (double b : breaks)
      if (b > kRhoStar && b < 1e12) knots.push_back(std::log(b));
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end(),
                            [](double x, double y) { return std::abs(x - y) < 1e-12; }),
                knots.end());
    t_ = knots;
    cum_.resize(t_.size());
    cum_[0] = vacuum_ ? vacuum_(kRhoStar) : 0.0;
    for (std::size_t i = 1; i < t_.size(); ++i) cum_[i] = cum_[i - 1] + cell(t_[i - 1], t_[i]);
    if (!vacuum_) {
      // non-integrable vacuum: shift so that r(ref_rho) = 0
      const double shift = raw(ref_rho);
      for (auto& c : cum_) c -= shift;
      shift_ = shift;
    }
  }

  double operator()(double rho) const {
    if (!(rho > 0)) throw std::domain_error("density must be positive");
    if (rho < kRhoStar) {
      if (vacuum_) return vacuum_(rho);
      return cum_[0] - cell(std::log(rho), t_[0]);
    }
    const double t = std::log(rho);
    if (t >= t_.back()) return cum_.back() + cell(t_.back(), t);
    auto it = std::upper_bound(t_.begin(), t_.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - t_.begin()) - 1;
    return cum_[i] + cell(t_[i], t);
  }

  double sqrt_pp(double rho) const { return sqrt_pp_(rho); }

 private:
  double cell(double a, double b) const {
    return gk([this](double t) { return sqrt_pp_(std::exp(t)); }, a, b);
  }
  double raw(double rho) const { return (*this)(rho) + shift_; }

  RealFn sqrt_pp_, vacuum_;
  std::vector<double> t_, cum_;
  double shift_ = 0;
};

// solve r(rho) = y in t = log rho; dr/dt = rho r'(rho) = sqrt P'(rho)
double invert_monotone(const RealFn& r, const RealFn& drdt_rho, double y) {
  auto F = [&](double t) { return r(std::exp(t)) - y; };
  double lo = -1.0, hi = 1.0;
  double flo = F(lo), fhi = F(hi);
  for (int i = 0; flo > 0 && i < 200; ++i) {
    hi = lo;
    fhi = flo;
    lo = std::max(lo * 2.0 - 1.0, -700.0);
    flo = F(lo);
    if (lo <= -700.0) break;
  }
  for (int i = 0; fhi < 0 && i < 200; ++i) {
    lo = hi;
    flo = fhi;
    hi = std::min(hi * 2.0 + 1.0, 700.0);
    fhi = F(hi);
    if (hi >= 700.0) break;
  }
  if (flo > 0 || fhi < 0) throw std::domain_error("transformed value outside the range of r");
  double t = 0.5 * (lo + hi);
  const double tol = 1e-12 * std::max(1.0, std::abs(y));
  for (int it = 0; it < 200; ++it) {
    const double f = F(t);
    if (std::abs(f) <= tol) break;
    if (f > 0)
      hi = t;
    else
      lo = t;
    const double d = drdt_rho(std::exp(t));
    double tn = d > 0 ? t - f / d : 0.5 * (lo + hi);
    if (!(tn > lo && tn < hi)) tn = 0.5 * (lo + hi);
    if (hi - lo < 1e-15 * std::max(1.0, std::abs(t))) {
      t = tn;
      break;
    }
    t = tn;
  }
  return std::exp(t);
}

double hermite(double x0, double x1, double p0, double p1, double m0, double m1, double x) {
  const double h = x1 - x0, u = (x - x0) / h;
  const double h00 = 2 * u * u * u - 3 * u * u + 1, h10 = u * u * u - 2 * u * u + u;
  const double h01 = -2 * u * u * u + 3 * u * u, h11 = u * u * u - u * u;
  return h00 * p0 + h10 * h * m0 + h01 * p1 + h11 * h * m1;
}
double hermite_d(double x0, double x1, double p0, double p1, double m0, double m1, double x) {
  const double h = x1 - x0, u = (x - x0) / h;
  const double d00 = 6 * u * u - 6 * u, d10 = 3 * u * u - 4 * u + 1;
  const double d01 = -6 * u * u + 6 * u, d11 = 3 * u * u - 2 * u;
  return (d00 * p0 + d01 * p1) / h + d10 * m0 + d11 * m1;
}
double hermite_dd(double x0, double x1, double p0, double p1, double m0, double m1, double x) {
  const double h = x1 - x0, u = (x - x0) / h;
  const double e00 = 12 * u - 6, e10 = 6 * u - 4, e01 = -12 * u + 6, e11 = 6 * u - 2;
  return (e00 * p0 + e01 * p1) / (h * h) + (e10 * m0 + e11 * m1) / h;
}

RealFn differenced(const RealFn& f) {
  return [f](double x) {
    const double h = 1e-5 * std::max(std::abs(x), 1e-8);
    return (f(x + h) - f(x - h)) / (2 * h);
  };
}

}  // namespace

// ------------------------------------------------------------------ laws

PressureLaw PressureLaw::gamma(double a, double g) {
  if (!(a > 0) || !(g >= 1)) throw std::invalid_argument("gamma law needs a>0, gamma>=1");
  PressureLaw law;
  law.kind = LawKind::Gamma;
  law.label = g == 1.0 ? "isothermal" : "gamma";
  law.params = {a, g};
  law.P = [a, g](double rho) { return a * std::pow(rho, g); };
  law.Pprime = [a, g](double rho) { return a * g * std::pow(rho, g - 1); };
  law.Psecond = [a, g](double rho) { return a * g * (g - 1) * std::pow(rho, g - 2); };
  return law;
}

PressureLaw PressureLaw::chaplygin(double a, double kappa) {
  if (!(a > 0) || !(kappa > 0.5 && kappa <= 1.0))
    throw std::invalid_argument("chaplygin law needs a>0, kappa in (1/2,1]");
  PressureLaw law;
  law.kind = LawKind::Chaplygin;
  law.label = "chaplygin";
  law.params = {a, kappa};
  const double e = 1.0 - 2.0 * kappa;
  law.P = [a, e](double rho) { return -a * std::pow(rho, e); };
  law.Pprime = [a, e](double rho) { return -a * e * std::pow(rho, e - 1); };
  law.Psecond = [a, e](double rho) { return -a * e * (e - 1) * std::pow(rho, e - 2); };
  return law;
}

PressureLaw PressureLaw::piecewise_gamma(const std::vector<PowerSegment>& segs) {
  if (segs.size() < 2) throw std::invalid_argument("piecewise law needs >= 2 segments");
  if (!(segs.front().gamma > 1) || !(segs.back().gamma > 1))
    throw std::invalid_argument("first and last segments need gamma > 1");
  if (segs.front().lo != 0.0) throw std::invalid_argument("first segment must start at 0");
  for (std::size_t i = 0; i < segs.size(); ++i) {
    if (!(segs[i].a > 0) || !(segs[i].gamma >= 1))
      throw std::invalid_argument("segment needs a>0, gamma>=1");
    if (!(segs[i].hi > segs[i].lo)) throw std::invalid_argument("empty segment");
    if (i + 1 < segs.size()) {
      const auto& s = segs[i];
      const auto& t = segs[i + 1];
      if (!(t.lo > s.hi)) throw std::invalid_argument("segments must leave a transition gap");
      if (!(s.a * std::pow(s.hi, s.gamma) < t.a * std::pow(t.lo, t.gamma)))
        throw std::invalid_argument("pressure must increase across a transition");
    }
  }
  // verify monotone transitions
  for (std::size_t i = 0; i + 1 < segs.size(); ++i) {
    const auto& s = segs[i];
    const auto& t = segs[i + 1];
    const double x0 = s.hi, x1 = t.lo;
    const double p0 = s.a * std::pow(x0, s.gamma), p1 = t.a * std::pow(x1, t.gamma);
    const double m0 = s.a * s.gamma * std::pow(x0, s.gamma - 1);
    const double m1 = t.a * t.gamma * std::pow(x1, t.gamma - 1);
    for (int j = 0; j <= 2000; ++j) {
      const double x = x0 + (x1 - x0) * j / 2000.0;
      if (!(hermite_d(x0, x1, p0, p1, m0, m1, x) > 0))
        throw std::invalid_argument("cubic transition is not increasing; adjust breakpoints");
    }
  }
  PressureLaw law;
  law.kind = LawKind::PiecewiseGamma;
  law.label = "piecewise-gamma";
  law.segments = segs;
  auto eval = [segs](double rho, int order) {
    for (std::size_t i = 0; i < segs.size(); ++i) {
      const auto& s = segs[i];
      if (rho <= s.hi || i + 1 == segs.size()) {
        if (rho >= s.lo || i == 0) {
          if (order == 0) return s.a * std::pow(rho, s.gamma);
          if (order == 1) return s.a * s.gamma * std::pow(rho, s.gamma - 1);
          return s.a * s.gamma * (s.gamma - 1) * std::pow(rho, s.gamma - 2);
        }
      }
      if (i + 1 == segs.size()) break;
      const auto& t = segs[i + 1];
      if (rho > s.hi && rho < t.lo) {
        const double x0 = s.hi, x1 = t.lo;
        const double p0 = s.a * std::pow(x0, s.gamma), p1 = t.a * std::pow(x1, t.gamma);
        const double m0 = s.a * s.gamma * std::pow(x0, s.gamma - 1);
        const double m1 = t.a * t.gamma * std::pow(x1, t.gamma - 1);
        if (order == 0) return hermite(x0, x1, p0, p1, m0, m1, rho);
        if (order == 1) return hermite_d(x0, x1, p0, p1, m0, m1, rho);
        return hermite_dd(x0, x1, p0, p1, m0, m1, rho);
      }
    }
    return std::nan("");
  };
  law.P = [eval](double rho) { return eval(rho, 0); };
  law.Pprime = [eval](double rho) { return eval(rho, 1); };
  law.Psecond = [eval](double rho) { return eval(rho, 2); };
  return law;
}

PressureLaw PressureLaw::piecewise_default() {
  return piecewise_gamma({{2.0, 5.0 / 3.0, 0.0, 1.0}, {3.0, 1.0, 2.0, 3.0}, {2.0, 1.5, 4.0, kInf}});
}

PressureLaw PressureLaw::white_dwarf(double c1, double c2, double c3) {
  if (!(c1 > 0 && c2 > 0 && c3 > 0)) throw std::invalid_argument("white dwarf needs c1,c2,c3>0");
  PressureLaw law;
  law.kind = LawKind::WhiteDwarf;
  law.label = "white-dwarf";
  law.params = {c1, c2, c3};
  law.P = [c1, c2, c3](double rho) {
    const double top = c2 * std::cbrt(rho);
    return c1 * gk([c3](double y) { return std::pow(y, 4) / std::sqrt(c3 + y * y); }, 0.0, top);
  };
  law.Pprime = [c1, c2, c3](double rho) {
    const double q = std::cbrt(rho) * std::cbrt(rho);
    return c1 * std::pow(c2, 5) / 3.0 * q / std::sqrt(c3 + c2 * c2 * q);
  };
  law.Psecond = [c1, c2, c3](double rho) {
    const double q = std::cbrt(rho) * std::cbrt(rho);
    const double A = c1 * std::pow(c2, 5) / 3.0;
    const double D = c3 + c2 * c2 * q;
    // d/drho [q D^{-1/2}], q' = 2q/(3 rho)
    const double dq = 2.0 * q / (3.0 * rho);
    return A * (dq / std::sqrt(D) - 0.5 * q * c2 * c2 * dq / (D * std::sqrt(D)));
  };
  return law;
}

PressureLaw PressureLaw::soft_vacuum() {
  PressureLaw law;
  law.kind = LawKind::SoftVacuum;
  law.label = "soft-vacuum";
  const double ln2 = std::log(2.0);
  const double m = 4.0 / ln2;
  const double pp_half = std::pow(ln2, -4);
  law.Pprime = [m, pp_half](double rho) {
    if (rho < 0.5) return std::pow(std::log(rho), -4);
    return pp_half * std::pow(2.0 * rho, m);
  };
  law.Psecond = [m, pp_half](double rho) {
    if (rho < 0.5) return -4.0 * std::pow(std::log(rho), -5) / rho;
    return pp_half * m * 2.0 * std::pow(2.0 * rho, m - 1);
  };
  auto pp = law.Pprime;
  law.P = [pp](double rho) {
    // P(0) = 0; integrate P' in t = log rho from a tiny floor
    const double lo = std::min(rho, 1e-300);
    if (rho <= lo) return 0.0;
    return gk([pp](double t) { return pp(std::exp(t)) * std::exp(t); }, std::log(1e-300),
              std::log(rho));
  };
  return law;
}

PressureLaw PressureLaw::custom(RealFn P, RealFn Pprime, std::string label) {
  PressureLaw law;
  law.kind = LawKind::Custom;
  law.label = std::move(label);
  law.P = std::move(P);
  law.Pprime = std::move(Pprime);
  return law;
}

PressureLaw PressureLaw::custom_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open pressure table " + path);
  std::vector<double> lr, pv, lpp;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double rho, p, pp;
    if (!(ss >> rho >> p >> pp)) continue;  // header
    if (!(rho > 0) || !(pp > 0)) throw std::invalid_argument("table needs rho>0 and P'>0");
    if (!lr.empty() && !(std::log(rho) > lr.back()))
      throw std::invalid_argument("table rho must increase");
    lr.push_back(std::log(rho));
    pv.push_back(p);
    lpp.push_back(std::log(pp));
  }
  if (lr.size() < 4) throw std::invalid_argument("table needs at least 4 rows");
  using boost::math::interpolators::pchip;
  auto ipp = std::make_shared<pchip<std::vector<double>>>(std::vector<double>(lr),
                                                          std::vector<double>(lpp));
  auto ip = std::make_shared<pchip<std::vector<double>>>(std::vector<double>(lr),
                                                         std::vector<double>(pv));
  const double tlo = lr.front(), thi = lr.back();
  const double slo = (lpp[1] - lpp[0]) / (lr[1] - lr[0]);
  const std::size_t n = lr.size();
  const double shi = (lpp[n - 1] - lpp[n - 2]) / (lr[n - 1] - lr[n - 2]);
  const double lpp_lo = lpp.front(), lpp_hi = lpp.back();
  auto Pprime = [ipp, tlo, thi, slo, shi, lpp_lo, lpp_hi](double rho) {
    const double t = std::log(rho);
    // power-law continuation outside the table
    if (t < tlo) return std::exp(lpp_lo + slo * (t - tlo));
    if (t > thi) return std::exp(lpp_hi + shi * (t - thi));
    return std::exp((*ipp)(t));
  };
  const double p_lo = pv.front(), p_hi = pv.back();
  auto P = [ip, tlo, thi, p_lo, p_hi, Pprime](double rho) {
    const double t = std::log(rho);
    if (t < tlo) return p_lo - gk([&](double s) { return Pprime(std::exp(s)) * std::exp(s); }, t, tlo);
    if (t > thi) return p_hi + gk([&](double s) { return Pprime(std::exp(s)) * std::exp(s); }, thi, t);
    return (*ip)(t);
  };
  return custom(P, Pprime, "custom:" + path);
}

PressureLaw PressureLaw::by_name(const std::string& name, const std::vector<double>& p) {
  auto get = [&](std::size_t i, double def) { return i < p.size() ? p[i] : def; };
  if (name == "gamma") return gamma(get(0, 1.0), get(1, 5.0 / 3.0));
  if (name == "isothermal") return isothermal(get(0, 1.0));
  if (name == "chaplygin") return chaplygin(get(0, 1.0), get(1, 1.0));
  if (name == "piecewise-gamma") return piecewise_default();
  if (name == "white-dwarf") return white_dwarf(get(0, 1.0), get(1, 1.0), get(2, 1.0));
  if (name == "soft-vacuum") return soft_vacuum();
  if (name.rfind("custom:", 0) == 0) return custom_table(name.substr(7));
  throw std::invalid_argument("unknown pressure law '" + name + "'");
}

// ------------------------------------------------------------------ transforms

namespace {

void finish_general(PressureTransform& tr) {
  tr.mode = SoundMode::GeneralSound;
  tr.lambda_lip = sample_lambda_lip(tr);
}

// C1 cubic from (y0, v0, slope s0) to zero value and slope at y0 + dir
RealFn blend_to_zero(RealFn inner, double y0, double v0, double s0, int dir) {
  return [=](double y) {
    const double u = (y - y0) * dir;
    if (u <= 0) return inner(y);
    if (u >= 1) return 0.0;
    return hermite(0.0, 1.0, v0, 0.0, s0 * dir, 0.0, u);
  };
}

}  // namespace

PressureTransform build_transform(const PressureLaw& law) {
  PressureTransform tr;
  switch (law.kind) {
    case LawKind::Gamma: {
      const double a = law.params[0], g = law.params[1];
      if (g == 1.0) {
        const double sa = std::sqrt(a);
        tr.mode = SoundMode::ConstantSound;
        tr.sound_constant = std::sqrt(law.P(1.0));
        tr.r = [sa](double rho) { return sa * std::log(rho); };
        tr.r_prime = [sa](double rho) { return sa / rho; };
        tr.r_inv = [sa](double y) { return std::exp(y / sa); };
        const double c = tr.sound_constant;
        tr.theta = [c](double) { return c; };
        tr.lambda_ext = tr.theta;
        tr.r0 = -kInf;
        tr.r_inf = kInf;
        tr.lambda_lip = 0;
        return tr;
      }
      const double K = 2.0 * std::sqrt(a * g) / (g - 1.0), e = 0.5 * (g - 1.0);
      tr.r = [K, e](double rho) { return K * std::pow(rho, e); };
      tr.r_prime = [K, e](double rho) { return K * e * std::pow(rho, e - 1); };
      tr.r_inv = [K, e](double y) {
        if (!(y > 0)) throw std::domain_error("gamma transform needs a positive value");
        return std::pow(y / K, 1.0 / e);
      };
      tr.theta = [e](double y) { return e * y; };
      tr.lambda_ext = tr.theta;
      tr.r0 = 0;
      tr.r_inf = kInf;
      finish_general(tr);
      return tr;
    }
    case LawKind::Chaplygin: {
      const double a = law.params[0], k = law.params[1];
      const double K = std::sqrt(a) * std::sqrt(2 * k - 1) / k;
      tr.r = [K, k](double rho) { return -K * std::pow(rho, -k); };
      tr.r_prime = [K, k](double rho) { return K * k * std::pow(rho, -k - 1); };
      tr.r_inv = [K, k](double y) {
        if (!(y < 0)) throw std::domain_error("chaplygin transform needs a negative value");
        return std::pow(-y / K, -1.0 / k);
      };
      tr.theta = [k](double x) { return -k * x; };
      tr.lambda_ext = tr.theta;
      tr.r0 = -kInf;
      tr.r_inf = 0;
      finish_general(tr);
      return tr;
    }
    case LawKind::SoftVacuum: {
      const double ln2 = std::log(2.0), m = 4.0 / ln2;
      const double sp = std::pow(ln2, -2);  // sqrt P'(1/2)
      const double y_half = 1.0 / ln2;
      tr.r = [=](double rho) {
        if (!(rho > 0)) throw std::domain_error("density must be positive");
        if (rho < 0.5) return -1.0 / std::log(rho);
        return y_half + sp * (2.0 / m) * (std::pow(2.0 * rho, 0.5 * m) - 1.0);
      };
      tr.r_prime = [=](double rho) {
        if (rho < 0.5) return 1.0 / (rho * std::log(rho) * std::log(rho));
        return sp * std::pow(2.0 * rho, 0.5 * m) / rho;
      };
      tr.r_inv = [=](double y) {
        if (!(y > 0)) throw std::domain_error("soft-vacuum transform needs a positive value");
        if (y < y_half) return std::exp(-1.0 / y);
        return 0.5 * std::pow(1.0 + (y - y_half) * m / (2.0 * sp), 2.0 / m);
      };
      tr.theta = [=](double y) {
        if (y < y_half) return y * y;
        return sp + 0.5 * m * (y - y_half);
      };
      auto th = tr.theta;
      tr.lambda_ext = [th](double y) { return th(std::abs(y)); };
      tr.r0 = 0;
      tr.r_inf = kInf;
      finish_general(tr);
      return tr;
    }
    case LawKind::PiecewiseGamma:
    case LawKind::WhiteDwarf:
    case LawKind::Custom:
      break;
  }

  // quadrature-backed transforms
  const RealFn Pp = law.Pprime;
  RealFn sqrt_pp = [Pp](double rho) { return std::sqrt(Pp(rho)); };
  RealFn vacuum;
  std::vector<double> breaks;
  RealFn low_side;  // Lambda below r0
  if (law.kind == LawKind::PiecewiseGamma) {
    const auto& s = law.segments.front();
    const double K = 2.0 * std::sqrt(s.a * s.gamma) / (s.gamma - 1.0), e = 0.5 * (s.gamma - 1.0);
    vacuum = [K, e](double rho) { return K * std::pow(rho, e); };
    for (const auto& seg : law.segments) {
      if (seg.lo > 0) breaks.push_back(seg.lo);
      if (std::isfinite(seg.hi)) breaks.push_back(seg.hi);
    }
    low_side = [e](double y) { return e * y; };
    tr.note = "cubic Hermite transitions; Lambda continued linearly below 0";
  } else if (law.kind == LawKind::WhiteDwarf) {
    const double c1 = law.params[0], c2 = law.params[1], c3 = law.params[2];
    const double K = std::sqrt(3.0 * c1 * c2 * c2 * c2 * std::sqrt(c3));
    vacuum = [=](double rho) {
      const double x = c2 * std::cbrt(rho) / std::sqrt(c3);
      const double x2 = x * x;
      return K * x * (1.0 - x2 / 12.0 + x2 * x2 / 32.0);
    };
    tr.note = "Lambda extended as an odd function";
  } else {
    // power-law probe of P' near vacuum
    const double q = std::log(Pp(10 * kRhoStar) / Pp(kRhoStar)) / std::log(10.0);
    if (q > 1e-6) {
      const double base = std::sqrt(Pp(kRhoStar));
      vacuum = [base, q](double rho) { return 2.0 / q * base * std::pow(rho / kRhoStar, 0.5 * q); };
    }
    tr.extension_builtin = false;
    tr.note = "custom law: Lambda blended to 0 by a C1 cubic over one unit (ad hoc, no built-in extension)";
  }
  auto table = std::make_shared<QuadTable>(sqrt_pp, vacuum, breaks, 1.0);
  tr.r = [table](double rho) { return (*table)(rho); };
  tr.r_prime = [Pp](double rho) { return std::sqrt(Pp(rho)) / rho; };
  tr.analytic_derivative = false;
  auto rr = tr.r;
  tr.r_inv = [rr, sqrt_pp](double y) { return invert_monotone(rr, sqrt_pp, y); };
  auto rinv = tr.r_inv;
  tr.r0 = vacuum ? 0.0 : -kInf;
  tr.r_inf = kInf;
  const double r0 = tr.r0;
  tr.theta = [rinv, sqrt_pp, r0](double y) {
    if (!(y > r0)) throw std::domain_error("value below the admissible range");
    return sqrt_pp(rinv(y));
  };
  auto th = tr.theta;
  if (law.kind == LawKind::PiecewiseGamma) {
    tr.lambda_ext = [th, low_side](double y) { return y > 0 ? th(y) : low_side(y); };
  } else if (law.kind == LawKind::WhiteDwarf) {
    tr.lambda_ext = [th](double y) {
      if (y == 0.0) return 0.0;
      return y > 0 ? th(y) : -th(-y);
    };
  } else if (vacuum) {
    const double y0 = 1e-8;
    const double v0 = th(y0);
    const double s0 = (th(2 * y0) - th(y0)) / y0;
    tr.lambda_ext = blend_to_zero(th, 0.0, v0, s0, -1);
  } else {
    tr.lambda_ext = th;
  }
  finish_general(tr);
  return tr;
}

double verify_structural_identity(const PressureLaw& law, const PressureTransform& tr,
                                  const std::vector<double>& rho_grid) {
  double worst = 0;
  for (double rho : rho_grid) {
    double rp;
    if (tr.analytic_derivative) {
      rp = tr.r_prime(rho);
    } else {
      const double h = 1e-6 * rho;
      rp = (tr.r(rho + h) - tr.r(rho - h)) / (2 * h);
    }
    const double pp = law.Pprime(rho);
    const double res = std::abs(pp - (rho * rp) * (rho * rp)) / std::max(1.0, pp);
    worst = std::max(worst, res);
  }
  return worst;
}

AcousticsCheck theta_prime_acoustics(const PressureLaw& law, const PressureTransform& tr,
                                     double rho) {
  AcousticsCheck out;
  const double y = tr.r(rho);
  const double h = 1e-5 * std::max(std::abs(y), 1e-3);
  out.differenced = (tr.lambda_ext(y + h) - tr.lambda_ext(y - h)) / (2 * h);
  const RealFn pss = law.Psecond ? law.Psecond : differenced(law.Pprime);
  out.closed_form = 0.5 * rho * pss(rho) / law.Pprime(rho);
  out.agree = std::abs(out.differenced - out.closed_form) <=
              1e-6 * std::max(1.0, std::abs(out.closed_form));
  return out;
}

AdmissibilityReport admissibility_check(const PressureTransform& tr, const TorusField& varrho) {
  AdmissibilityReport rep;
  double lo = kInf, hi = -kInf;
  for (double v : varrho.real_values(0)) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  double margin = kInf;
  if (std::isfinite(tr.r0)) margin = std::min(margin, lo - tr.r0);
  if (std::isfinite(tr.r_inf)) margin = std::min(margin, tr.r_inf - hi);
  rep.margin = margin;
  rep.ok = margin > 0;
  return rep;
}

double sample_lambda_lip(const PressureTransform& tr) {
  std::vector<double> ys;
  double span = 1.0;
  if (tr.mode == SoundMode::ConstantSound) return 0.0;
  for (double rho : log_grid(1e-6, 1e4, 400)) {
    const double y = tr.r(rho);
    ys.push_back(y);
    span = std::max(span, std::abs(y));
  }
  for (int i = 0; i <= 400; ++i) ys.push_back(-span + 2.0 * span * i / 400.0);
  double lip = 0;
  for (double y : ys) {
    const double h = 1e-6 * std::max(1.0, std::abs(y));
    const double d = (tr.lambda_ext(y + h) - tr.lambda_ext(y - h)) / (2 * h);
    if (std::isfinite(d)) lip = std::max(lip, std::abs(d));
  }
  return lip;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    g[static_cast<std::size_t>(i)] =
        std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / std::max(1, n - 1));
  return g;
}

}  // namespace sevl
