/// @file ergodic.hpp
/// @brief Time-averaged occupation measures of scalar observables, stabilization and tightness.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sevl/dni.hpp"

namespace sevl {

struct Observable {
  std::string name;
  std::function<double(const TorusField&)> eval;
};

/// Re/Im of the transverse component at the lowest axis modes (k1 reads component 2 when d >= 2,
/// k2 component 1, ...), plus the weak and strong norms.
std::vector<Observable> standard_observables(int d, double theta, double s);
/// Index of an observable by name (throws if missing).
int observable_index(const std::vector<std::string>& names, const std::string& name);

std::string field_digest(const TorusField& f);

struct PathSeries {
  std::vector<double> times;
  std::vector<std::vector<double>> values;  // [observable][sample]
  bool completed = true;
  std::string stop_reason;
};

struct OccupationRun {
  std::vector<std::string> names;
  std::string x0_digest;
  double cadence = 0;
  double T = 0;
  std::vector<PathSeries> paths;
};

/// Ensemble of incompressible paths sampled every `cadence` on (0, T].
OccupationRun occupation_run(const IncompressibleConfig& cfg, const TorusField& u0,
                             const std::vector<Observable>& obs, double T, double cadence,
                             int paths);

struct Histogram {
  double lo = 0, hi = 1;
  std::vector<double> mass;  // sums to 1
};

struct OccupationMeasure {
  std::vector<std::string> names;
  std::vector<std::vector<double>> samples;  // pooled over paths and time
  double T = 0;
  std::string x0_digest;
  int paths = 0;

  std::size_t count() const { return samples.empty() ? 0 : samples.front().size(); }
  Histogram histogram(int obs, int bins, double lo, double hi) const;
  Histogram histogram(int obs, int bins = 256) const;
};

/// Samples with 0 < t <= T from every path.
OccupationMeasure accumulate(const OccupationRun& run, double T);
/// Pools two measures (same observables and initial condition).
OccupationMeasure merge(const OccupationMeasure& a, const OccupationMeasure& b);

/// Integrated squared CDF difference per observable on a shared grid over the pooled range.
std::vector<double> stabilization_diagnostic(const OccupationMeasure& a,
                                             const OccupationMeasure& b, int bins = 256);

struct TailRow {
  double R = 0;
  double tail = 0;      // occupation mass with |u|^2 > R
  double mean_V = 0;    // occupation mean of V(|u|^2)
  double envelope = 0;  // 2 mean_V / V(R)
};
/// `obs` must hold a norm (squared inside).
std::vector<TailRow> tightness_diagnostic(const OccupationMeasure& mu, int obs,
                                          const std::vector<double>& R_grid, VKind V);

std::string histogram_csv(const Histogram& h);

}  // namespace sevl
