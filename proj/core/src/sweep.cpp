#include "nullcollapse/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "json.hpp"
#include "nullcollapse/errors.hpp"

namespace nullcollapse::sweep {

using nlohmann::json;

std::string to_string(Mode m) { return m == Mode::bondi ? "bondi" : "trace"; }

Mode mode_from_string(const std::string& s) {
  if (s == "bondi") return Mode::bondi;
  if (s == "trace") return Mode::trace;
  throw MalformedData("unknown sweep mode '" + s + "'");
}

std::string to_string(RunOutcome o) {
  switch (o) {
    case RunOutcome::horizon: return "horizon";
    case RunOutcome::dispersal: return "dispersal";
    case RunOutcome::undecided: return "undecided";
    case RunOutcome::not_evolved: return "not-evolved";
  }
  return "undecided";
}

RunOutcome run_outcome_from_string(const std::string& s) {
  for (auto o : {RunOutcome::horizon, RunOutcome::dispersal, RunOutcome::undecided, RunOutcome::not_evolved}) {
    if (to_string(o) == s) return o;
  }
  throw MalformedData("unknown run outcome '" + s + "'");
}

std::string SweepRecord::to_json() const {
  nlohmann::ordered_json j;
  j["index"] = index;
  j["lambda1"] = point.lambda1;
  j["lambda2"] = point.lambda2;
  j["amplitude"] = point.amplitude;
  j["outcome"] = sweep::to_string(outcome);
  if (horizon) {
    j["horizon"] = {{"u", horizon->u}, {"r", horizon->r}, {"m", horizon->m}};
  } else {
    j["horizon"] = nullptr;
  }
  j["peak_mu"] = peak_mu;
  j["verdict"] = diagnostics::to_string(verdict);
  j["case"] = case_id;
  j["reason"] = reason;
  j["wall_seconds"] = wall_seconds;
  j["resolution"] = resolution;
  return j.dump();
}

SweepRecord SweepRecord::from_json(const std::string& line) {
  SweepRecord r;
  try {
    const auto j = json::parse(line);
    r.index = j.at("index").get<std::size_t>();
    r.point.lambda1 = j.at("lambda1").get<double>();
    r.point.lambda2 = j.at("lambda2").get<double>();
    r.point.amplitude = j.at("amplitude").get<double>();
    r.outcome = run_outcome_from_string(j.at("outcome").get<std::string>());
    if (j.contains("horizon") && !j["horizon"].is_null()) {
      const auto& h = j["horizon"];
      r.horizon = HorizonData{h.at("u").get<double>(), h.at("r").get<double>(), h.at("m").get<double>()};
    }
    r.peak_mu = j.value("peak_mu", 0.0);
    r.verdict = diagnostics::verdict_from_string(j.at("verdict").get<std::string>());
    r.case_id = j.value("case", 0);
    r.reason = j.value("reason", std::string{});
    r.wall_seconds = j.value("wall_seconds", 0.0);
    r.resolution = j.value("resolution", 0);
  } catch (const json::exception& e) {
    throw MalformedData(std::string("sweep record: ") + e.what());
  }
  if ((r.outcome == RunOutcome::horizon) != r.horizon.has_value()) {
    throw MalformedData("sweep record " + std::to_string(r.index) + ": horizon data disagrees with outcome");
  }
  return r;
}

void SweepPlan::validate() const {
  if (points.empty()) throw ConfigError("sweep.points", "grid is empty");
  if (base.empty()) throw ConfigError("sweep.base", "no base datum");
  if (workers < 1) throw ConfigError("sweep.workers", "must be >= 1");
  if (!(seed_radius > 0.0)) throw ConfigError("sweep.seed_radius", "must be positive");
  const bool perturbed = std::any_of(points.begin(), points.end(),
                                     [](const SweepPoint& p) { return p.lambda1 != 0.0 || p.lambda2 != 0.0; });
  if (perturbed) {
    if (base.domain() != Domain::s_line) {
      throw ConfigError("sweep.base", "perturbed points need an s-line datum");
    }
    if (basis.f1.empty() || basis.f2.empty()) throw ConfigError("sweep.basis", "perturbation basis missing");
  }
  if (mode == Mode::trace) {
    if (base.domain() != Domain::s_line) throw ConfigError("sweep.base", "trace mode needs an s-line datum");
    if (trace.size() == 0) throw ConfigError("sweep.trace", "trace mode needs a boundary trace");
  } else {
    run.validate();
  }
}

std::vector<SweepPoint> grid_points(const std::vector<double>& lambda1, const std::vector<double>& lambda2) {
  std::vector<SweepPoint> pts;
  for (double a : lambda1) {
    for (double b : lambda2) pts.push_back({a, b, 1.0});
  }
  return pts;
}

std::vector<SweepPoint> amplitude_points(const std::vector<double>& amplitudes) {
  std::vector<SweepPoint> pts;
  for (double a : amplitudes) pts.push_back({0.0, 0.0, a});
  return pts;
}

BVFunction datum_at(const SweepPlan& plan, const SweepPoint& p) {
  BVFunction f = plan.base;
  if (p.lambda1 != 0.0 || p.lambda2 != 0.0) f = perturb(plan.base, plan.basis, {p.lambda1, p.lambda2});
  if (p.amplitude != 1.0) f = linear_combination(p.amplitude, f, 0.0, f);
  if (plan.mode == Mode::bondi && f.domain() == Domain::s_line) f = s_profile_to_radius(f, plan.seed_radius);
  return f;
}

namespace {

BVFunction vartheta_at(const SweepPlan& plan, const SweepPoint& p) {
  BVFunction f = plan.base;
  if (p.lambda1 != 0.0 || p.lambda2 != 0.0) f = perturb(plan.base, plan.basis, {p.lambda1, p.lambda2});
  if (p.amplitude != 1.0) f = linear_combination(p.amplitude, f, 0.0, f);
  return f;
}

void fill_verdict(SweepRecord& rec, const diagnostics::CensorshipVerdict& v) {
  rec.verdict = v.verdict;
  rec.case_id = v.case_id;
  rec.reason = v.reason;
}

}  // namespace

SweepRecord evaluate_point(const SweepPlan& plan, std::size_t index, int resolution) {
  SweepRecord rec;
  rec.index = index;
  rec.point = plan.points.at(index);
  rec.resolution = resolution;
  const auto start = std::chrono::steady_clock::now();
  try {
    if (plan.mode == Mode::trace) {
      const BVFunction vt = vartheta_at(plan, rec.point);
      rec.outcome = RunOutcome::not_evolved;
      fill_verdict(rec, diagnostics::classify(plan.trace, vt(0.0), plan.classify, &vt));
    } else {
      bondi::RunConfig cfg = plan.run;
      cfg.resolution = resolution;
      const auto result = bondi::run(datum_at(plan, rec.point), cfg);
      const auto& rep = result.report;
      rec.peak_mu = rep.peak_mu;
      switch (rep.outcome) {
        case bondi::Outcome::horizon:
          rec.outcome = RunOutcome::horizon;
          rec.horizon = HorizonData{rep.u, rep.r, rep.m};
          break;
        case bondi::Outcome::dispersal: rec.outcome = RunOutcome::dispersal; break;
        case bondi::Outcome::max_time_reached: rec.outcome = RunOutcome::undecided; break;
      }
      rec.reason = rep.note;
      if (plan.classify_runs && plan.base.domain() == Domain::s_line) {
        const auto curve = bondi::extract_incoming_curve(result.archive, cfg.u_start, plan.seed_radius);
        const auto trace = exterior::trace_from_curve(curve);
        const BVFunction vt = vartheta_at(plan, rec.point);
        fill_verdict(rec, diagnostics::classify(trace, trace.theta0.front(), plan.classify, &vt));
      }
    }
  } catch (const std::exception& e) {
    rec.outcome = plan.mode == Mode::trace ? RunOutcome::not_evolved : RunOutcome::undecided;
    rec.horizon.reset();
    rec.verdict = diagnostics::Verdict::undecided;
    rec.reason = std::string("run failed: ") + e.what();
  }
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

std::vector<SweepRecord> read_records(const std::filesystem::path& path) {
  std::vector<SweepRecord> out;
  std::ifstream f(path);
  if (!f) return out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    out.push_back(SweepRecord::from_json(line));
  }
  return out;
}

std::vector<SweepRecord> run_sweep(const SweepPlan& plan, const std::filesystem::path& records) {
  plan.validate();
  const std::size_t n = plan.points.size();
  std::vector<std::optional<SweepRecord>> slots(n);
  if (!records.empty()) {
    for (auto& r : read_records(records)) {
      if (r.index < n) {
        const auto& p = plan.points[r.index];
        if (p.lambda1 == r.point.lambda1 && p.lambda2 == r.point.lambda2 && p.amplitude == r.point.amplitude) {
          slots[r.index] = std::move(r);
        }
      }
    }
  }
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < n; ++i) {
    if (!slots[i]) todo.push_back(i);
  }

  // Completed records are rewritten in plan order; resumed ones already sit in the file.
  std::ofstream out;
  if (!records.empty()) {
    std::ofstream rewrite(records, std::ios::trunc);
    if (!rewrite) throw IoError("cannot write sweep records " + records.string());
    for (const auto& s : slots) {
      if (s) rewrite << s->to_json() << '\n';
    }
    rewrite.close();
    out.open(records, std::ios::app);
  }
  std::mutex mu;
  std::size_t next_to_write = 0;
  std::vector<bool> written(n, false);
  for (std::size_t i = 0; i < n; ++i) written[i] = slots[i].has_value();
  auto flush = [&] {
    while (next_to_write < n && slots[next_to_write]) {
      if (!written[next_to_write] && out.is_open()) {
        out << slots[next_to_write]->to_json() << '\n';
        out.flush();
      }
      written[next_to_write] = true;
      ++next_to_write;
    }
  };

  std::atomic<std::size_t> cursor{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t k = cursor.fetch_add(1);
      if (k >= todo.size()) return;
      SweepRecord rec = evaluate_point(plan, todo[k], plan.run.resolution);
      std::lock_guard lock(mu);
      slots[todo[k]] = std::move(rec);
      flush();
    }
  };
  {
    const int width = std::max(1, std::min<int>(plan.workers, static_cast<int>(todo.size())));
    std::vector<std::jthread> pool;
    for (int w = 1; w < width; ++w) pool.emplace_back(worker);
    worker();
  }
  {
    std::lock_guard lock(mu);
    flush();
  }
  std::vector<SweepRecord> result;
  result.reserve(n);
  for (auto& s : slots) result.push_back(std::move(*s));
  return result;
}

std::string SweepSummary::to_json() const {
  nlohmann::ordered_json j;
  j["total"] = total;
  j["undecided"] = undecided;
  j["undecided_fraction"] = undecided_fraction;
  j["monotonicity_violations"] = monotonicity_violations;
  auto& vc = j["verdicts"] = nlohmann::ordered_json::object();
  for (const auto& [v, c] : verdict_counts) vc[diagnostics::to_string(v)] = c;
  return j.dump(2);
}

SweepSummary summarize(const std::vector<SweepRecord>& records) {
  SweepSummary s;
  s.total = records.size();
  std::map<diagnostics::Verdict, std::size_t> counts;
  for (const auto& r : records) {
    const bool evolved = r.outcome != RunOutcome::not_evolved;
    const bool undecided = evolved ? r.outcome == RunOutcome::undecided : r.verdict == diagnostics::Verdict::undecided;
    if (undecided) ++s.undecided;
    ++counts[r.verdict];
  }
  s.undecided_fraction = s.total ? double(s.undecided) / double(s.total) : 0.0;
  s.verdict_counts.assign(counts.begin(), counts.end());

  // Pure amplitude family: once a horizon forms, larger amplitudes should keep forming one.
  std::vector<const SweepRecord*> fam;
  for (const auto& r : records) {
    if (r.point.lambda1 == 0.0 && r.point.lambda2 == 0.0 &&
        (r.outcome == RunOutcome::horizon || r.outcome == RunOutcome::dispersal)) {
      fam.push_back(&r);
    }
  }
  std::sort(fam.begin(), fam.end(), [](auto* a, auto* b) { return a->point.amplitude < b->point.amplitude; });
  bool seen_horizon = false;
  for (const auto* r : fam) {
    if (r->outcome == RunOutcome::horizon) {
      seen_horizon = true;
    } else if (seen_horizon) {
      ++s.monotonicity_violations;
    }
  }
  return s;
}

double BisectionResult::width() const { return std::abs(horizon_amplitude - dispersal_amplitude); }

double BisectionResult::relative_width() const {
  const double mid = 0.5 * std::abs(horizon_amplitude + dispersal_amplitude);
  return mid > 0.0 ? width() / mid : width();
}

BisectionResult bisect_critical(const SweepPlan& plan, double lo, double hi, const BisectionOptions& opts) {
  if (!(opts.rel_tol > 0.0) || opts.max_runs < 3) throw ConfigError("bisection", "bad tolerance or budget");
  SweepPlan p = plan;
  p.mode = Mode::bondi;
  p.classify_runs = false;
  p.points = amplitude_points({lo, hi});
  p.validate();

  BisectionResult res;
  res.resolution = p.run.resolution;
  auto eval = [&](double amp) {
    p.points = amplitude_points({amp});
    SweepRecord r = evaluate_point(p, 0, res.resolution);
    res.runs.push_back(r);
    return r;
  };
  SweepRecord a = eval(lo), b = eval(hi);
  auto decided = [](const SweepRecord& r) {
    return r.outcome == RunOutcome::horizon || r.outcome == RunOutcome::dispersal;
  };
  if (!decided(a) || !decided(b) || a.outcome == b.outcome) {
    throw PreconditionError("bisect_critical: bracket ends give " + to_string(a.outcome) + " and " +
                            to_string(b.outcome) + "; need one horizon and one dispersal");
  }
  if (a.outcome == RunOutcome::horizon) std::swap(a, b);
  res.dispersal_record = a;
  res.horizon_record = b;
  res.dispersal_amplitude = a.point.amplitude;
  res.horizon_amplitude = b.point.amplitude;

  int runs = 2;
  while (res.relative_width() > opts.rel_tol) {
    if (runs >= opts.max_runs) {
      res.reason = "run budget exhausted";
      return res;
    }
    const double mid = 0.5 * (res.dispersal_amplitude + res.horizon_amplitude);
    SweepRecord r = eval(mid);
    ++runs;
    if (!decided(r)) {
      if (res.escalated || runs >= opts.max_runs) {
        res.reason = "undecided midpoint at amplitude " + std::to_string(mid);
        return res;
      }
      res.escalated = true;
      res.resolution *= opts.escalation_factor;
      r = eval(mid);
      ++runs;
      if (!decided(r)) {
        res.reason = "undecided midpoint after resolution escalation at amplitude " + std::to_string(mid);
        return res;
      }
    }
    if (r.outcome == RunOutcome::horizon) {
      res.horizon_amplitude = mid;
      res.horizon_record = r;
    } else {
      res.dispersal_amplitude = mid;
      res.dispersal_record = r;
    }
  }
  res.converged = true;
  res.reason = "bracket below relative tolerance";
  return res;
}

}  // namespace nullcollapse::sweep
