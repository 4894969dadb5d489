// Acceptance runner: one PASS/FAIL line per criterion, exit status 0 only if all pass.
#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sevl/compressible.hpp"
#include "sevl/dni.hpp"
#include "sevl/harness.hpp"
#include "sevl/psdo.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace sevl;

namespace {

fs::path g_out;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

// runs a harness subcommand and returns its result.json (empty object if missing)
json harness_run(const std::string& sub, const json& cfg, const std::string& tag, int* rc_out = nullptr) {
  const fs::path dir = g_out / tag;
  fs::create_directories(dir);
  const fs::path cfile = dir / "input.json";
  std::ofstream(cfile) << cfg.dump(2);
  const int rc = harness::run({sub, "--config", cfile.string(), "--out", dir.string(), "--quiet"});
  if (rc_out) *rc_out = rc;
  std::ifstream in(dir / "result.json");
  if (!in) return json::object();
  return json::parse(in, nullptr, false);
}

bool ok(const json& r) { return r.is_object() && r.value("pass", false); }

std::string first_failure(const json& r) {
  if (!r.is_object() || !r.contains("failures") || r["failures"].empty()) return "no result";
  return r["failures"][0].get<std::string>();
}

// ---------------------------------------------------------------------------- 1-3

Outcome skew_cancellation() {
  const GridPtr g = make_grid(2, 32);
  std::vector<PsdoOperator> ops;
  for (double a : {0.0, 0.5, 1.0}) ops.push_back(build_bessel_transport(std::vector<double>{1.0, 0.5}, a, 1));
  for (double v : {0.5, 1.0}) ops.push_back(build_fractional_riesz({1.0, 0.5}, v, 1));
  double worst = 0;
  for (const auto& Q : ops)
    for (double s : {0.0, 1.0, 2.0, 4.0}) {
      const auto r = cancel_probe(Q, g, s, 50, 11);
      worst = std::max({worst, r.c1_hat, r.c2_hat});
    }
  return {worst < 1e-10, "worst ratio " + sci(worst) + " over 5 operators x 4 orders"};
}

Outcome uniform_cancellation() {
  std::string detail;
  bool pass = true;
  for (int d : {1, 2}) {
    const GridPtr g = make_grid(d, 32);
    std::vector<TorusField> cf;
    const double c[2] = {1.0, 0.5};
    for (int i = 0; i < d; ++i)
      cf.push_back(TorusField::from_function(g, 1, [ci = c[i], i](const double* x, double* o) {
        o[0] = ci * (1.0 + 0.5 * std::sin(x[i]));
      }));
    const PsdoOperator Q = build_bessel_transport(cf, 0.0, 1);
    const auto reps = cancel_probe_levels(Q, g, 0.0, {2, 4, 8, 16}, 50, 5);
    double mx = 0;
    for (const auto& r : reps) mx = std::max(mx, r.c2_hat);
    const double ratio = mx / reps.front().c2_hat;
    pass = pass && reps.front().c2_hat > 0 && ratio <= 2.0;
    detail += (d == 1 ? "" : ", ") + std::string("d=") + std::to_string(d) + " max/first " + sci(ratio);
  }
  return {pass, detail};
}

Outcome operator_rates() {
  const PsdoOperator Q = build_bessel_transport(std::vector<double>{1.0}, 0.5, 1);
  const GridPtr g16 = make_grid(1, 16);
  const std::vector<RateStudy> st = {mollifier_rate(make_grid(1, 32), 4.0, 1.0, {2, 4, 8}),
                                     renormalized_rate(Q, g16, 4.0, 1.0, {1, 2, 4}, 1),
                                     renormalized_rate(Q, g16, 4.0, 1.0, {1, 2, 4}, 2)};
  bool pass = true;
  std::string detail = "slopes";
  for (const auto& r : st) {
    pass = pass && std::abs(r.slope - r.expected) <= 0.3;
    detail += " " + sci(r.slope) + " (" + sci(r.expected) + ")";
  }
  return {pass, detail};
}

// ---------------------------------------------------------------------------- 4-6

Outcome marcus() {
  const json r = harness_run("verify-marcus", json::object(), "c4_marcus");
  const json& m = r.value("metrics", json::object());
  const bool have = m.contains("translation_error") && m.contains("isometry_error") &&
                    m.contains("step_doubling_change");
  if (!have) return {false, "metrics missing: " + first_failure(r)};
  return {ok(r), "translation " + sci(m["translation_error"]) + ", isometry " +
                     sci(m["isometry_error"]) + ", step doubling " + sci(m["step_doubling_change"])};
}

Outcome pressure() {
  bool pass = true;
  std::string detail;
  for (const std::string law : {"gamma", "isothermal", "chaplygin", "piecewise-gamma", "white-dwarf", "soft-vacuum"}) {
    const json r = harness_run("verify-pressure", {{"law", {{"name", law}, {"params", json::array()}}}},
                               "c5_" + law);
    const bool p = ok(r) && r["metrics"].contains("structural_residual");
    pass = pass && p;
    if (!p) detail += law + ": " + first_failure(r) + "; ";
  }
  return {pass, pass ? "6 laws: identity, round trip, acoustics, law-specific checks" : detail};
}

Outcome max_principle() {
  const json r = harness_run("max-principle", json::object(), "c6_max_principle");
  return {ok(r), ok(r) ? "translation, rest, oscillatory within envelope" : first_failure(r)};
}

// ---------------------------------------------------------------------------- 7-9

Outcome conservation() {
  const json a = harness_run("simulate-incompressible", {{"grid", {{"d", 2}, {"N", 64}}}, {"paths", 1},
                                                         {"scheme", {{"dt", 1e-3}, {"T", 1.0}}}},
                             "c7_taylor_green");
  const json op1 = {{"kind", "bessel-transport"}, {"coeffs", {1.0, 0.5}}, {"scale", 0.5}};
  const json op2 = {{"kind", "bessel-transport"}, {"coeffs", {0.0, 1.0}}};
  const json b = harness_run("simulate-incompressible",
                             {{"grid", {{"d", 2}, {"N", 64}}}, {"paths", 16},
                              {"scheme", {{"dt", 1e-3}, {"T", 1.0}, {"initial", "random"}, {"q1", op1}, {"q2", op2}}}},
                             "c7_noisy");
  const bool have = a.value("metrics", json::object()).contains("max_l2_drift_per_time") &&
                    b.value("metrics", json::object()).contains("max_l2_drift_per_time");
  if (!have) return {false, "drift not measured: " + first_failure(ok(a) ? b : a)};
  return {ok(a) && ok(b), "noise-free drift " + sci(a["metrics"]["max_l2_drift_per_time"]) +
                              ", noisy max drift/time " + sci(b["metrics"]["max_l2_drift_per_time"])};
}

Outcome dni_level(const std::string& level, const std::string& tag) {
  const json r = harness_run("dni-check", {{"dni", {{"level", level}}}}, tag);
  return {ok(r), ok(r) ? level + " " + r["metrics"].value("spec", "") : first_failure(r)};
}

Outcome gronwall_moment() { return dni_level("D1", "c8_dni_d1"); }

Outcome dni_uniform_and_decay() {
  const Outcome d2 = dni_level("D2", "c9_dni_d2");
  const Outcome d3 = dni_level("D3", "c9_dni_d3");
  return {d2.pass && d3.pass, (d2.pass ? "D2 monotone" : "D2: " + d2.detail) + ", " +
                                  (d3.pass ? "D3 decay integral" : "D3: " + d3.detail)};
}

// ---------------------------------------------------------------------------- 10

// For P = rho^3/3 the Riemann invariants w = u +- rho obey inviscid Burgers; solve x = xi + t w0(xi).
double burgers_exact(const std::function<double(double)>& w0, const std::function<double(double)>& dw0,
                     double x, double t) {
  double xi = x - t * w0(x);
  for (int it = 0; it < 60; ++it) {
    const double F = xi + t * w0(xi) - x;
    const double step = F / (1.0 + t * dw0(xi));
    xi -= step;
    if (std::abs(step) < 1e-15) break;
  }
  return w0(xi);
}

Outcome compressible_convergence() {
  const GridPtr g = make_grid(1, 64);
  const PressureTransform tr = build_transform(PressureLaw::gamma(1.0 / 3.0, 3.0));
  auto rho0 = [](double x) { return 1.0 + 0.2 * std::sin(x); };
  auto u0 = [](double x) { return 0.1 * std::cos(x); };
  CompressibleState X0;
  X0.varrho = TorusField::from_function(g, 1, [&](const double* x, double* o) { o[0] = tr.r(rho0(x[0])); });
  X0.u = TorusField::from_function(g, 1, [&](const double* x, double* o) { o[0] = u0(x[0]); });
  SchemeConfig cfg;
  cfg.dt = 1e-3;
  cfg.T = 0.5;
  cfg.sample_every = 100;
  const Trajectory tj = simulate(tr, cfg, X0);
  if (!tj.completed) return {false, "reference run stopped: " + tj.stop_reason};

  auto wp = [&](double x) { return u0(x) + rho0(x); };
  auto wm = [&](double x) { return u0(x) - rho0(x); };
  auto dwp = [](double x) { return -0.1 * std::sin(x) + 0.2 * std::cos(x); };
  auto dwm = [](double x) { return -0.1 * std::sin(x) - 0.2 * std::cos(x); };
  const auto vr = tj.final_state.varrho.real_values(0);
  const auto vu = tj.final_state.u.real_values(0);
  double err2 = 0;
  const double h = 2 * M_PI / g->n;
  for (std::size_t i = 0; i < g->size; ++i) {
    const double x = g->coord(i, 0);
    const double a = burgers_exact(wp, dwp, x, cfg.T), b = burgers_exact(wm, dwm, x, cfg.T);
    const double rho = 0.5 * (a - b), u = 0.5 * (a + b);
    err2 += h * (std::pow(tr.r_inv(vr[i]) - rho, 2) + std::pow(vu[i] - u, 2));
  }
  const double err = std::sqrt(err2);

  SchemeConfig noisy = cfg;
  noisy.dt = 0.01;
  noisy.seed = 2024;
  noisy.noise.Q1 = build_bessel_transport(std::vector<double>{1.0}, 0.0, 1).scaled(0.5);
  noisy.noise.Q2 = build_bessel_transport(std::vector<double>{1.0}, 0.0, 1).scaled(0.3);
  noisy.noise.nu = LevyMeasure::two_point(0.5, 4.0);
  noisy.noise.z.kind = ItoCoefficient::Kind::Linear;
  noisy.noise.z.amplitude = 0.3;
  const ConvergenceStudy st = self_convergence(tr, noisy, X0, 3, 32);
  if (!st.failure.empty()) return {false, "noisy run stopped: " + st.failure};
  return {err < 1e-6 && st.order >= 0.5,
          "L2 error vs characteristics " + sci(err) + ", noisy strong order " + sci(st.order)};
}

// ---------------------------------------------------------------------------- 11-12

Outcome ergodic() {
  const json lin = harness_run("ergodic", {{"ergodic", {{"config", "linear"}}}}, "c11_linear");
  const json d2 = harness_run("ergodic", {{"ergodic", {{"config", "d2"}}}}, "c11_d2");
  std::string detail;
  if (lin.value("metrics", json::object()).contains("occupation_variance"))
    detail = "variance " + sci(lin["metrics"]["occupation_variance"]) + " vs " +
             sci(lin["metrics"]["oracle_variance"]);
  else
    detail = "linear: " + first_failure(lin);
  detail += ok(d2) ? ", d2 distances decreasing and tail within envelope" : ", d2: " + first_failure(d2);
  return {ok(lin) && ok(d2), detail};
}

Outcome gronwall_verifier() {
  const double dt = 1e-3;
  std::vector<double> t, f, q;
  for (int i = 0; i <= 1000; ++i) {
    t.push_back(i * dt);
    f.push_back(std::exp(-i * dt));
    q.push_back(1.0);
  }
  const GronwallReport eq = gronwall_verify(t, f, f, q);
  std::mt19937_64 rng(99);
  int passed = 0;
  for (int k = 0; k < 100; ++k) {
    const GronwallTriple tr = generate_gronwall_triple(rng, 2.0, dt);
    const GronwallReport r = gronwall_verify(tr.t, tr.f1, tr.f2, tr.q);
    passed += r.preconditions && r.holds;
  }
  return {eq.holds && eq.equality_gap < 1e-4 && passed == 100,
          "equality gap " + sci(eq.equality_gap) + ", triples passed " + std::to_string(passed) + "/100"};
}

struct Criterion {
  int id;
  std::string name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string out = "acceptance_out";
  std::vector<int> only;
  app.add_option("--out", out, "directory for experiment outputs");
  app.add_option("--only", only, "run only these criterion numbers");
  CLI11_PARSE(app, argc, argv);
  g_out = fs::absolute(out);
  fs::create_directories(g_out);

  const std::vector<Criterion> all = {
      {1, "exact skew cancellation", 10, skew_cancellation},
      {2, "uniform renormalized cancellation", 30, uniform_cancellation},
      {3, "mollifier and operator rates", 60, operator_rates},
      {4, "Marcus flow", 60, marcus},
      {5, "pressure framework", 30, pressure},
      {6, "maximum principle", 30, max_principle},
      {7, "incompressible conservation", 300, conservation},
      {8, "Gronwall moment bound", 600, gronwall_moment},
      {9, "uniform bound and decay integral", 900, dni_uniform_and_decay},
      {10, "compressible self-convergence", 600, compressible_convergence},
      {11, "ergodic diagnostics", 1200, ergodic},
      {12, "Gronwall verifier", 5, gronwall_verifier},
  };
  const std::set<int> pick(only.begin(), only.end());
  int failed = 0;
  for (const auto& c : all) {
    if (!pick.empty() && !pick.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("%s %2d %-34s %s [%.1f s / %.0f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                o.detail.c_str(), secs, c.budget_s, in_time ? "" : " over budget");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
