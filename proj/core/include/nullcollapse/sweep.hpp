#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nullcollapse/bondi.hpp"
#include "nullcollapse/diagnostics.hpp"
#include "nullcollapse/exterior.hpp"
#include "nullcollapse/initial_data.hpp"

namespace nullcollapse::sweep {

enum class Mode {
  bondi,  // perturb, evolve, extract the s = 0 trace, classify
  trace,  // classify the perturbed datum against a fixed trace (the perturbation leaves gamma, I unchanged)
};

// not_evolved: trace mode, where no spacetime is evolved.
enum class RunOutcome { horizon, dispersal, undecided, not_evolved };

std::string to_string(Mode m);
Mode mode_from_string(const std::string& s);
std::string to_string(RunOutcome o);
RunOutcome run_outcome_from_string(const std::string& s);

struct SweepPoint {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double amplitude = 1.0;  // multiplies the whole perturbed datum
};

struct HorizonData {
  double u = 0.0, r = 0.0, m = 0.0;
};

struct SweepRecord {
  std::size_t index = 0;
  SweepPoint point;
  RunOutcome outcome = RunOutcome::undecided;
  std::optional<HorizonData> horizon;
  double peak_mu = 0.0;
  diagnostics::Verdict verdict = diagnostics::Verdict::undecided;
  int case_id = 0;
  std::string reason;
  double wall_seconds = 0.0;
  int resolution = 0;

  std::string to_json() const;  // one line
  static SweepRecord from_json(const std::string& line);
};

struct SweepPlan {
  Mode mode = Mode::bondi;
  // s-line datum (perturbed by the basis) or r-line theta(0, r) for pure
  // amplitude families; r-line data admit no perturbation.
  BVFunction base;
  PerturbationBasis basis;
  std::vector<SweepPoint> points;
  double seed_radius = 0.25;  // a: r = a exp(s) on the initial cone
  exterior::BoundaryTrace trace;  // trace mode only
  bondi::RunConfig run;
  diagnostics::ClassifyOptions classify;
  bool classify_runs = true;  // bondi mode: extract and classify the trace
  int workers = 1;

  void validate() const;
};

// Cartesian grid of (lambda1, lambda2) at unit amplitude, lambda2 fastest.
std::vector<SweepPoint> grid_points(const std::vector<double>& lambda1, const std::vector<double>& lambda2);
std::vector<SweepPoint> amplitude_points(const std::vector<double>& amplitudes);

// Datum of one point: theta(0, r) for bondi mode (after s_profile_to_radius
// when the base lives on the s-line), vartheta(s) for trace mode.
BVFunction datum_at(const SweepPlan& plan, const SweepPoint& p);

/// Runs one point end-to-end. Failures are caught and recorded as an
/// undecided record with the reason.
SweepRecord evaluate_point(const SweepPlan& plan, std::size_t index, int resolution);

/// Concurrent map over the plan's points with `plan.workers` threads.
/// With a records path, each record is appended as one JSON line in plan
/// order as soon as it and its predecessors are done; records already in the
/// file (matched by index) are kept and not rerun. Returns all records in
/// plan order.
std::vector<SweepRecord> run_sweep(const SweepPlan& plan, const std::filesystem::path& records = {});

std::vector<SweepRecord> read_records(const std::filesystem::path& path);

struct SweepSummary {
  std::size_t total = 0;
  std::size_t undecided = 0;
  double undecided_fraction = 0.0;
  // Amplitude-sorted outcomes that switch from horizon back to dispersal.
  std::size_t monotonicity_violations = 0;
  std::vector<std::pair<diagnostics::Verdict, std::size_t>> verdict_counts;
  std::string to_json() const;
};

SweepSummary summarize(const std::vector<SweepRecord>& records);

struct BisectionOptions {
  double rel_tol = 1e-4;  // stop once (hi - lo) <= rel_tol * |midpoint|
  int max_runs = 20;      // including the two endpoint runs
  int escalation_factor = 2;
};

struct BisectionResult {
  double horizon_amplitude = 0.0;    // bracket end that collapses
  double dispersal_amplitude = 0.0;  // bracket end that disperses
  SweepRecord horizon_record, dispersal_record;
  std::vector<SweepRecord> runs;
  int resolution = 0;
  bool converged = false;
  bool escalated = false;
  std::string reason;
  double width() const;
  double relative_width() const;
};

/// Bisection in the amplitude of `plan.base` (lambda1 = lambda2 = 0) between
/// `lo` and `hi`. Throws PreconditionError when both ends share an outcome.
/// An undecided midpoint is rerun once at escalated resolution, which then
/// stays in force; a second undecided midpoint stops the search.
BisectionResult bisect_critical(const SweepPlan& plan, double lo, double hi, const BisectionOptions& opts = {});

}  // namespace nullcollapse::sweep
