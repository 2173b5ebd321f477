// Acceptance run: one pass/fail line per criterion. Usage: acceptance [work-dir]
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "nullcollapse/bondi.hpp"
#include "nullcollapse/diagnostics.hpp"
#include "nullcollapse/exterior.hpp"
#include "nullcollapse/initial_data.hpp"
#include "nullcollapse/sweep.hpp"

using namespace nullcollapse;
namespace fs = std::filesystem;

namespace {

struct Result {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Archives produced along the way; criterion 5 runs its oracles on all of them.
struct NamedRun {
  std::string name;
  std::vector<bondi::SliceState> archive;
  std::function<std::vector<bondi::SliceState>()> refined;  // same data at twice the resolution, if available
};
std::vector<NamedRun> corpus;

// Finely sampled so the piecewise-linear data carry no kinks at grid scale.
BVFunction gaussian() { return gaussian_pulse(Domain::r_half_line, 0.3, 0.5, 0.1, 1.0, 1 << 17); }

bondi::RunConfig gaussian_config(int n) {
  bondi::RunConfig c;
  c.resolution = n;
  c.u_max = 0.9;
  return c;
}

// ---------------------------------------------------------------------------

Result flat_space() {
  bondi::RunConfig c;
  c.resolution = 256;
  c.u_start = -2.0;
  c.u_max = -0.5;
  c.stop_on_dispersal = false;
  const auto t0 = std::chrono::steady_clock::now();
  auto res = bondi::run(BVFunction::constant(Domain::r_half_line, 0.0), c);
  const double wall = seconds_since(t0);
  double worst = 0.0;
  for (const auto& s : res.archive) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      worst = std::max({worst, std::abs(s.m[i]), std::abs(s.lambda[i]), std::abs(s.nu[i]),
                        std::abs(s.kappa(i) - 1.0)});
    }
  }
  const double u_end = res.archive.back().u;
  corpus.push_back({"flat", std::move(res.archive)});
  return {worst <= 1e-10 && wall < 1.0 && u_end >= -0.5 - 1e-12,
          fmt("max|m,lambda,nu,kappa-1| = %.2e (<= 1e-10), wall %.3f s (< 1 s), reached u = %.3f", worst, wall,
              u_end)};
}

// theta = 0.5 everywhere. The continuum solution is scale invariant, so a run
// on [0, 3] must be the run on [0, 1] stretched by 3 in both u and r. The
// adaptive center reads p = 0 off the initial cone and follows the center
// as it regularizes; a fixed p = 0 would not.
Result constant_theta() {
  const double c = 0.5, mu_exact = c * c / (1.0 + c * c);
  const auto data = BVFunction::constant(Domain::r_half_line, c);
  auto config = [](double scale) {
    bondi::RunConfig rc;
    rc.resolution = 1024;
    rc.center = bondi::CenterModel::adaptive;
    rc.r_max = scale;
    rc.u_max = 0.5 * scale;
    rc.stop_on_dispersal = false;
    return rc;
  };
  auto a = bondi::run(data, config(1.0));
  auto b = bondi::run(data, config(3.0));

  double initial = 0.0;
  for (std::size_t i = 0; i < a.archive.front().size(); ++i) {
    initial = std::max(initial, std::abs(a.archive.front().mu(i) - mu_exact));
  }
  double evolved = 0.0, u_mismatch = 0.0;
  std::size_t compared = 0;
  const std::size_t slices = std::min(a.archive.size(), b.archive.size());
  for (std::size_t k = 0; k < slices; ++k) {
    const auto& sa = a.archive[k];
    const auto& sb = b.archive[k];
    u_mismatch = std::max(u_mismatch, std::abs(sb.u - 3.0 * sa.u));
    for (std::size_t i = 0, j = 0; i < sa.size() && j < sb.size();) {
      if (sa.label[i] < sb.label[j]) { ++i; continue; }
      if (sb.label[j] < sa.label[i]) { ++j; continue; }
      evolved = std::max(evolved, std::abs(sa.mu(i) - sb.mu(j)));
      ++compared;
      ++i;
      ++j;
    }
  }
  const bool same_shape = a.archive.size() == b.archive.size() && u_mismatch <= 1e-9;
  const double u_end = a.archive.back().u;
  corpus.push_back({"constant-theta", std::move(a.archive)});
  return {initial <= 1e-8 && evolved <= 1e-4 && same_shape && compared > 0,
          fmt("initial |mu - 0.2| = %.2e (<= 1e-8); scaled-run |mu| mismatch %.2e (<= 1e-4) over %zu points, "
              "u up to %.3f, slices %zu/%zu, max |u_B - 3u_A| = %.1e",
              initial, evolved, compared, u_end, slices, b.archive.size(), u_mismatch)};
}

Result boundary_closed_forms() {
  const auto tr = exterior::boundary_evolve(2.0, 1.0, [](double) { return -1.0; }, 10.0);
  double stationary = 0.0;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const double t = tr.t[k];
    stationary = std::max({stationary, std::abs(tr.kappa0[k] - 2.0), std::abs(tr.theta0[k] - 1.0),
                           std::abs(tr.gamma[k] - t), std::abs(tr.I[k] + std::expm1(-t))});
  }
  const auto blow = exterior::boundary_evolve(2.0, 0.0, [](double) { return 0.0; }, 1.0);
  const double stop = std::log(2.0) - 0.05;
  double blowup = 0.0;
  double reached = 0.0;
  for (std::size_t k = 0; k < blow.size() && blow.t[k] <= stop; ++k) {
    blowup = std::max(blowup, std::abs(blow.kappa0[k] - 2.0 / (2.0 - std::exp(blow.t[k]))));
    reached = blow.t[k];
  }
  const bool full = tr.t_end() >= 10.0 - 1e-12 && reached >= stop - 1e-3;
  return {stationary <= 1e-8 && blowup <= 1e-6 && full && blow.truncated,
          fmt("stationary trace error %.2e (<= 1e-8) on [0, %.1f]; blow-up trace abs error %.2e (<= 1e-6) "
              "up to t = %.4f, truncated at t = %.4f",
              stationary, tr.t_end(), blowup, reached, blow.t_end())};
}

Result convergence() {
  const auto orders = cli::self_convergence(gaussian(), gaussian_config(256), {256, 512, 1024});
  bool pass = true;
  std::string detail;
  for (const auto& o : orders) {
    if (o.region != "all") continue;
    const double l2 = o.l2_order.at(0), mx = o.max_order.at(0);
    pass = pass && l2 >= 1.9 && mx >= 1.9 && !o.exact && !o.non_monotone;
    detail += fmt("%s order L2 %.3f max %.3f; ", o.field.c_str(), l2, mx);
  }
  auto fine = bondi::run(gaussian(), gaussian_config(1024));
  corpus.push_back({"gaussian-1024", std::move(fine.archive)});
  return {pass, detail + "required >= 1.9 over N = 256, 512, 1024"};
}

sweep::SweepPlan annulus_plan(int n) {
  sweep::SweepPlan p;
  p.mode = sweep::Mode::bondi;
  p.seed_radius = 0.25;
  // r in [0.4, 0.5] seen from a = 0.25
  p.base = annular_bump(Domain::s_line, 1.0, std::log(1.6), std::log(2.0));
  p.basis = {default_f1(), BVFunction::constant(Domain::s_line, 0.0), {}};
  p.run.resolution = n;
  p.run.u_max = 3.0;
  p.classify_runs = false;
  return p;
}

struct OracleOutcome {
  double mass_excess = -1e300;  // worst over mass in r and along curves; > 0 fails the proxy
  double r_excess = -1e300, u_excess = -1e300, kappa_excess = -1e300;
  std::size_t curves = 0, bound_violations = 0;
  bool strict_ok = true;  // kappa >= 1 and the kappa0 bound, no discretization allowance
};

OracleOutcome run_oracles(const std::vector<bondi::SliceState>& archive) {
  OracleOutcome o;
  const auto in_r = diagnostics::mass_monotonicity_in_r(archive, 10.0);
  const auto kappa = diagnostics::kappa_at_least_one(archive);
  o.r_excess = in_r.max_violation;
  o.kappa_excess = kappa.max_violation;
  o.strict_ok = kappa.passed();
  const auto& first = archive.front();
  for (double f : {0.3, 0.6, 0.9}) {
    const auto curve = bondi::extract_incoming_curve(archive, first.u, f * first.r.back());
    if (curve.samples.size() < 4) continue;
    ++o.curves;
    o.u_excess = std::max(o.u_excess, diagnostics::mass_monotonicity_along(curve, 10.0).max_violation);
    for (const auto& e : diagnostics::lemma_checks(exterior::trace_from_curve(curve))) {
      if (e.name != "kappa0-growth") continue;
      o.bound_violations += e.violations;
      o.strict_ok = o.strict_ok && e.passed();
    }
  }
  o.mass_excess = std::max(o.r_excess, o.u_excess);
  return o;
}

Result oracles() {
  for (double amp : {3.0, 0.3}) {
    auto make = [amp](int n) {
      const auto plan = annulus_plan(n);
      return bondi::run(sweep::datum_at(plan, {0.0, 0.0, amp}), plan.run).archive;
    };
    corpus.push_back({fmt("annulus-A%.1f", amp), make(256), [make] { return make(512); }});
  }
  bool pass = true;
  std::size_t curves = 0, bound_violations = 0;
  double worst_r = -1e300, worst_u = -1e300, worst_kappa = -1e300;
  std::string failed, refined;
  for (const auto& run : corpus) {
    const auto o = run_oracles(run.archive);
    curves += o.curves;
    bound_violations += o.bound_violations;
    worst_r = std::max(worst_r, o.r_excess);
    worst_u = std::max(worst_u, o.u_excess);
    worst_kappa = std::max(worst_kappa, o.kappa_excess);
    bool ok = o.strict_ok;
    if (o.mass_excess > 0.0) {
      // Beyond the local allowance: accept only if it is truncation error,
      // shrinking at least at second order under refinement.
      ok = false;
      if (run.refined) {
        const auto fine = run_oracles(run.refined());
        ok = fine.strict_ok && fine.mass_excess <= o.mass_excess / 4.0;
        refined += fmt(" %s %.2e -> %.2e at 2N;", run.name.c_str(), o.mass_excess, std::max(fine.mass_excess, 0.0));
      }
    }
    if (!ok) failed += " " + run.name;
    pass = pass && ok;
  }
  return {pass && curves > 0,
          fmt("%zu runs, %zu curves; worst excess: in r %.2e, along curves %.2e, 1 - kappa %.2e; kappa0 bound "
              "violations %zu",
              corpus.size(), curves, worst_r, worst_u, worst_kappa, bound_violations) +
              (refined.empty() ? "" : "; refined:" + refined) + (failed.empty() ? "" : "; failing:" + failed)};
}

// Smooth subcritical exterior run with a manufactured boundary source.
struct CharacteristicErrors {
  double drift = 0.0;     // relative to max |psi(0, .)|
  double jacobian = 0.0;  // relative
  bool horizon = false;
};

CharacteristicErrors characteristic_errors(int intervals) {
  const double t_end = 2.0;
  const auto tr = exterior::boundary_evolve(1.05, 0.1, [](double t) { return -0.05 * std::exp(-t); }, t_end + 0.1);
  exterior::ExteriorConfig cfg;
  cfg.s_max = 2.0;
  cfg.points = intervals + 1;
  const auto st = exterior::initial_state([](double s) { return 0.1 + 0.3 * s * std::exp(-2.0 * s); }, tr.at(0.0), cfg);
  const double s0 = 0.1, d = 4.0 * cfg.ds();
  std::vector<double> outs;
  for (int k = 1; k <= 20; ++k) outs.push_back(t_end * k / 20);
  const auto run = exterior::run_exterior(st, tr, outs, {s0 - d, s0, s0 + d}, cfg);
  const auto dec = diagnostics::decomposition(run.characteristics[1], tr);
  double scale = 0.0;
  for (double v : diagnostics::psi_fields(st, tr).psi) scale = std::max(scale, std::abs(v));
  const auto jc = diagnostics::jacobian_check(run.characteristics[0], run.characteristics[1],
                                              run.characteristics[2], tr);
  return {dec.drift() / scale, jc.max_violation, run.horizon};
}

Result characteristic_structure() {
  const auto coarse = characteristic_errors(512);
  const auto fine = characteristic_errors(1024);
  const double rd = coarse.drift / fine.drift, rj = coarse.jacobian / fine.jacobian;
  const bool pass = !fine.horizon && fine.drift <= 1e-2 && fine.jacobian <= 1e-2 && rd >= 3.0 && rj >= 3.0;
  return {pass, fmt("N = 1024: drift %.2e, Jacobian error %.2e (<= 1e-2); halving the grid reduces them "
                    "%.2fx and %.2fx (>= 3x)",
                    fine.drift, fine.jacobian, rd, rj)};
}

// Cross-solver agreement. Each solver's truncation error is estimated from a
// run at half its resolution: |f_h - f_2h| / 3 for a second-order scheme.
std::vector<bondi::SliceState> cross_archive(int n) {
  bondi::RunConfig c;
  c.resolution = n;
  c.u_max = 1.5;
  c.regrid_fraction = 0.0;
  c.stop_on_dispersal = false;
  return bondi::run(gaussian(), c).archive;
}

exterior::CrosscheckReport cross_report(const std::vector<bondi::SliceState>& archive, int points) {
  exterior::CrosscheckOptions o;
  o.u0 = 0.0;
  o.a = 0.25;
  o.t_max = 3.0;
  o.exterior.points = points;
  o.exterior.s_max = 10.0;
  return exterior::crosscheck_bondi(archive, o);
}

using Field = std::vector<double> exterior::ExteriorState::*;
using MappedField = std::vector<std::vector<double>> exterior::MappedArchive::*;

Result cross_solver() {
  const auto fine_archive = cross_archive(1024);
  const auto main = cross_report(fine_archive, 513);
  const auto coarse_bondi = cross_report(cross_archive(512), 513);
  const auto coarse_ext = cross_report(fine_archive, 257);
  if (coarse_bondi.times != main.times || coarse_ext.times != main.times) {
    return {false, "comparison times differ between resolutions"};
  }
  const char* names[] = {"kappa", "beta", "theta", "zeta"};
  const Field fields[] = {&exterior::ExteriorState::kappa, &exterior::ExteriorState::beta,
                          &exterior::ExteriorState::theta, &exterior::ExteriorState::zeta};
  const MappedField mapped[] = {&exterior::MappedArchive::kappa, &exterior::MappedArchive::beta,
                                &exterior::MappedArchive::theta, &exterior::MappedArchive::zeta};
  const double disc[] = {main.discrepancy.kappa, main.discrepancy.beta, main.discrepancy.theta,
                         main.discrepancy.zeta};
  bool pass = main.compared > 0;
  std::string detail = fmt("overlap t <= %.2f, %zu points; ", main.t_overlap, main.compared);
  for (int f = 0; f < 4; ++f) {
    double est_bondi = 0.0, est_ext = 0.0;
    for (std::size_t k = 0; k < main.exterior.outputs.size(); ++k) {
      const auto& st = main.exterior.outputs[k];
      if (st.t == 0.0) continue;
      const auto& cst = coarse_ext.exterior.outputs.at(k);
      for (std::size_t j = 0; j < st.size(); ++j) {
        const double a = main.mapped.at(main.mapped.*mapped[f], st.t, j);
        const double b = coarse_bondi.mapped.at(coarse_bondi.mapped.*mapped[f], st.t, j);
        if (!std::isfinite(a)) continue;
        if (std::isfinite(b)) est_bondi = std::max(est_bondi, std::abs(a - b) / 3.0);
        if (j % 2 == 0) est_ext = std::max(est_ext, std::abs((st.*fields[f])[j] - (cst.*fields[f])[j / 2]) / 3.0);
      }
    }
    const double bound = 5.0 * std::max(est_bondi, est_ext);
    pass = pass && disc[f] <= bound;
    detail += fmt("%s %.2e <= 5 x %.2e; ", names[f], disc[f], std::max(est_bondi, est_ext));
  }
  return {pass, detail};
}

Result dichotomy() {
  const auto plan = annulus_plan(256);
  const double inner = 0.4, outer = 0.5, delta = (outer - inner) / outer;
  diagnostics::EstimateConstants k;  // c1 = 1

  const auto strong_datum = sweep::datum_at(plan, {0.0, 0.0, 3.0});
  auto first = bondi::initial_slice(strong_datum, plan.run);
  bondi::integrate_hypersurface(first, plan.run.hypersurface());
  const double eta0 =
      2.0 * (bondi::sample_slice(first, outer).m - bondi::sample_slice(first, inner).m) / outer;
  const bool above = eta0 > k.collapse_threshold(delta) && delta <= k.c0;

  const auto strong = bondi::run(strong_datum, plan.run).report;
  const auto weak = bondi::run(sweep::datum_at(plan, {0.0, 0.0, 0.3}), plan.run).report;

  sweep::BisectionOptions bo;
  bo.rel_tol = 1e-4;
  bo.max_runs = 20;
  const auto t0 = std::chrono::steady_clock::now();
  const auto bis = sweep::bisect_critical(plan, 0.3, 3.0, bo);
  const double wall = seconds_since(t0);
  const bool pass = above && strong.outcome == bondi::Outcome::horizon &&
                    weak.outcome == bondi::Outcome::dispersal && bis.converged &&
                    bis.relative_width() <= 1e-4 && bis.runs.size() <= 20;
  return {pass, fmt("eta0 = %.4f > %.4f (delta = %.2f); A = 3: %s at r = %.4f; A = 0.3: %s; critical amplitude "
                    "in [%.6f, %.6f], relative width %.1e after %zu runs (%.1f s, N = %d)",
                    eta0, k.collapse_threshold(delta), delta, bondi::to_string(strong.outcome).c_str(), strong.r,
                    bondi::to_string(weak.outcome).c_str(), bis.dispersal_amplitude, bis.horizon_amplitude,
                    bis.relative_width(), bis.runs.size(), wall, bis.resolution)};
}

using Fn = std::function<double(double)>;

Result classifier_suite() {
  struct Case {
    int expected;
    Fn I, dI;
  };
  const std::vector<Case> cases = {
      {1, [](double t) { return 1.0 - std::exp(-t); }, [](double t) { return std::exp(-t); }},
      {2, [](double t) { return t; }, [](double) { return 1.0; }},
      {3, [](double t) { return -t; }, [](double) { return -1.0; }},
      {4, [](double t) { return 1.0 + 0.5 * std::sin(t); }, [](double t) { return 0.5 * std::cos(t); }},
      // finite lower limit 0 at the zeros of 1 + sin t, upper limit infinite
      {5, [](double t) { const double a = 1.0 + std::sin(t); return t * a * a; },
       [](double t) { const double a = 1.0 + std::sin(t); return a * a + 2.0 * t * a * std::cos(t); }},
      {6, [](double t) { const double a = 1.0 + std::sin(t); return -t * a * a; },
       [](double t) { const double a = 1.0 + std::sin(t); return -(a * a + 2.0 * t * a * std::cos(t)); }},
      {7, [](double t) { return t * std::sin(t); }, [](double t) { return std::sin(t) + t * std::cos(t); }},
  };
  const Fn gamma = [](double t) { return t; };
  const Fn dgamma = [](double) { return 1.0; };
  int right = 0;
  std::string got;
  for (const auto& c : cases) {
    // theta0(0) = 2 keeps case 1 away from its exceptional branch
    const auto tr = exterior::manufactured_trace(gamma, dgamma, c.I, c.dI, 2.0, 200.0, 0.01);
    const auto v = diagnostics::classify(tr, 2.0);
    const bool ok = v.case_id == c.expected && v.verdict == diagnostics::Verdict::generic_thm21;
    right += ok;
    got += fmt("%d->%d ", c.expected, v.case_id);
  }

  // Base: stationary trace (I -> 1 = theta0(0)) and e^s vartheta(s) = vartheta(0).
  const auto tr = exterior::boundary_evolve(2.0, 1.0, [](double) { return -1.0; }, 200.0, {0.01});
  const auto base = default_f1(30.0, 0.02);
  const auto base_verdict = diagnostics::classify(tr, base(0.0), {}, &base);
  std::vector<double> s, g;
  diagnostics::g_table(tr, s, g);
  const PerturbationBasis basis{default_f1(), build_f2(s, g), {}};
  int flips1 = 0, flips2 = 0;
  for (double l : {-1.0, -1e-3, 1e-3, 1.0}) {
    const auto v1 = perturb(base, basis, {l, 0.0});
    flips1 += diagnostics::classify(tr, v1(0.0), {}, &v1).verdict == diagnostics::Verdict::generic_thm21;
    const auto v2 = perturb(base, basis, {0.0, l});
    flips2 += diagnostics::classify(tr, v2(0.0), {}, &v2).verdict == diagnostics::Verdict::generic_thm31;
  }
  const bool base_ok = base_verdict.verdict == diagnostics::Verdict::exceptional_candidate;
  return {right == 7 && base_ok && flips1 == 4 && flips2 == 4,
          fmt("cases %s(%d/7); base %s; lambda1 flips %d/4 to generic-thm21; lambda2 flips %d/4 to generic-thm31",
              got.c_str(), right, diagnostics::to_string(base_verdict.verdict).c_str(), flips1, flips2)};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

Result determinism(const fs::path& work) {
  fs::create_directories(work);
  const auto cfg = work / "determinism.json";
  std::ofstream(cfg) << R"({"version": 1,
    "initial_data": {"shape": "gaussian", "amplitude": 0.3, "center": 0.5, "width": 0.1, "extent": 1},
    "run": {"resolution": 256, "u_max": 0.9}})";
  std::string archives[2];
  for (int k = 0; k < 2; ++k) {
    cli::Invocation inv;
    inv.subcommand = "evolve";
    inv.config = cfg;
    inv.out = work / fmt("determinism-%d", k);
    inv.force = true;
    inv.quiet = true;
    if (cli::dispatch(inv) != cli::kOk) return {false, "evolve failed"};
    archives[k] = slurp(inv.out / "archive.ncar");
  }
  return {!archives[0].empty() && archives[0] == archives[1],
          fmt("two evolve runs: %zu and %zu bytes, %s", archives[0].size(), archives[1].size(),
              archives[0] == archives[1] ? "identical" : "different")};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "nullcollapse_acceptance";
  struct Criterion {
    const char* title;
    std::function<Result()> check;
  };
  const std::vector<Criterion> criteria = {
      {"flat-space exactness", flat_space},
      {"constant-theta closed form", constant_theta},
      {"boundary ODE closed forms", boundary_closed_forms},
      {"self-convergence", convergence},
      {"proved-inequality oracles", oracles},
      {"characteristic structure", characteristic_structure},
      {"cross-solver agreement", cross_solver},
      {"collapse/dispersal dichotomy", dichotomy},
      {"classifier suite", classifier_suite},
      {"determinism", [&] { return determinism(work); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Result r;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      r = criteria[i].check();
    } catch (const std::exception& e) {
      r = {false, std::string("threw: ") + e.what()};
    }
    failed += !r.pass;
    std::printf("criterion %2zu %s  %s: %s [%.1f s]\n", i + 1, r.pass ? "PASS" : "FAIL", criteria[i].title,
                r.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
