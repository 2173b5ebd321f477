#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "nullcollapse/archive.hpp"
#include "nullcollapse/diagnostics.hpp"
#include "nullcollapse/errors.hpp"
#include "nullcollapse/exterior.hpp"
#include "nullcollapse/sweep.hpp"

namespace nullcollapse::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::trunc);
  if (!f) throw IoError("cannot write " + p.string());
  f << text;
  if (text.empty() || text.back() != '\n') f << '\n';
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

std::string fixed(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

}  // namespace

config::Config resolve_config(const Invocation& inv) {
  fs::path path = inv.config;
  if (path.empty()) {
    if (const char* env = std::getenv(config::kConfigEnv); env && *env) path = env;
  }
  config::Config cfg = path.empty() ? config::Config{} : config::load(path);
  if (inv.resolution) {
    cfg.run.resolution = *inv.resolution;
    cfg.exterior.points = *inv.resolution + 1;
  }
  config::apply_tolerance_profile(cfg, inv.tolerance_profile);
  cfg.validate();
  return cfg;
}

void prepare_out_dir(const fs::path& out, bool allow_existing) {
  std::error_code ec;
  if (fs::exists(out, ec)) {
    if (!fs::is_directory(out)) throw IoError("output path " + out.string() + " is not a directory");
    if (!allow_existing && !fs::is_empty(out)) {
      throw IoError("output directory " + out.string() + " is not empty (pass --force to reuse it)");
    }
    return;
  }
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory " + out.string() + ": " + ec.message());
}

void write_manifest(const fs::path& out, const std::string& subcommand, const config::Config& cfg,
                    const std::vector<fs::path>& outputs) {
  ojson j;
  j["tool"] = "nullcollapse";
  j["subcommand"] = subcommand;
  j["schema_version"] = config::kSchemaVersion;
  j["config"] = ojson::parse(config::to_json(cfg));
  auto& files = j["outputs"] = ojson::array();
  for (const auto& p : outputs) {
    files.push_back({{"path", p.filename().string()},
                     {"bytes", fs::file_size(p)},
                     {"fnv1a", hex64(archive::file_checksum(p))}});
  }
  write_text(out / "manifest.json", j.dump(2));
}

EvolveOutputs evolve(const config::Config& cfg, const fs::path& out) {
  EvolveOutputs o;
  const BVFunction data = cfg.initial.build();
  BVFunction theta = data;
  if (data.domain() == Domain::s_line) theta = s_profile_to_radius(data, cfg.seed_radius);
  o.result = bondi::run(theta, cfg.run);

  o.archive = out / "archive.ncar";
  archive::write_archive(o.archive, o.result.archive,
                         {{"resolution", std::to_string(cfg.run.resolution)},
                          {"seed_u", fixed(cfg.seed_u)},
                          {"seed_radius", fixed(cfg.seed_radius)},
                          {"gauge", bondi::to_string(cfg.run.gauge)},
                          {"center", bondi::to_string(cfg.run.center)}});

  const auto& rep = o.result.report;
  ojson r;
  r["outcome"] = bondi::to_string(rep.outcome);
  if (rep.outcome == bondi::Outcome::horizon) r["horizon"] = {{"u", rep.u}, {"r", rep.r}, {"m", rep.m}, {"mu", rep.mu}};
  r["peak_mu"] = rep.peak_mu;
  r["max_mu"] = rep.peak_mu;
  r["steps"] = rep.steps;
  r["slices"] = o.result.archive.size();
  r["note"] = rep.note;
  o.report = out / "report.json";
  write_text(o.report, r.dump(2));

  o.history = out / "history.csv";
  std::ofstream h(o.history, std::ios::trunc);
  if (!h) throw IoError("cannot write " + o.history.string());
  h << "u,max_mu,m_outer\n" << std::setprecision(17);
  for (const auto& s : o.result.history) h << s.u << ',' << s.max_mu << ',' << s.m_outer << '\n';
  return o;
}

namespace {

struct Matched {
  std::vector<double> r0;
  std::vector<std::vector<double>> theta, m;  // [run][point]
};

// Points shared by every run, keyed by their initial radius (label + 1) / N.
Matched match_final_slices(const std::vector<bondi::SliceState>& finals, const std::vector<int>& ns, double r_max) {
  Matched out;
  std::vector<std::map<long long, std::size_t>> where(finals.size());
  const long long finest = ns.back();
  for (std::size_t k = 0; k < finals.size(); ++k) {
    const long long scale = finest / ns[k];
    for (std::size_t i = 0; i < finals[k].size(); ++i) {
      const double lab = finals[k].label[i];
      if (lab != std::floor(lab) || std::isnan(finals[k].m[i])) continue;  // inserted points carry fractional labels
      where[k][(static_cast<long long>(lab) + 1) * scale] = i;
    }
  }
  out.theta.resize(finals.size());
  out.m.resize(finals.size());
  for (const auto& entry : where[0]) {
    const long long key = entry.first;
    bool everywhere = true;
    for (std::size_t k = 1; k < finals.size() && everywhere; ++k) everywhere = where[k].count(key) > 0;
    if (!everywhere) continue;
    out.r0.push_back(r_max * double(key) / double(finest));
    for (std::size_t k = 0; k < finals.size(); ++k) {
      const std::size_t i = where[k].at(key);
      out.theta[k].push_back(finals[k].theta[i]);
      out.m[k].push_back(finals[k].m[i]);
    }
  }
  return out;
}

FieldOrder orders_for(const std::string& field, const std::string& region,
                      const std::vector<std::vector<double>>& f, const std::vector<std::size_t>& idx) {
  FieldOrder fo;
  fo.field = field;
  fo.region = region;
  double scale = 0.0;
  for (const auto& run : f) {
    for (std::size_t i : idx) scale = std::max(scale, std::abs(run[i]));
  }
  for (std::size_t k = 0; k + 1 < f.size(); ++k) {
    double l2 = 0.0, mx = 0.0;
    for (std::size_t i : idx) {
      const double d = f[k + 1][i] - f[k][i];
      l2 += d * d;
      mx = std::max(mx, std::abs(d));
    }
    fo.l2.push_back(idx.empty() ? 0.0 : std::sqrt(l2 / double(idx.size())));
    fo.max.push_back(mx);
  }
  const double rounding = 1e-13 * std::max(1.0, scale);
  fo.exact = std::all_of(fo.max.begin(), fo.max.end(), [&](double e) { return e <= rounding; });
  for (std::size_t k = 0; k + 1 < fo.l2.size(); ++k) {
    fo.l2_order.push_back(std::log2(fo.l2[k] / fo.l2[k + 1]));
    fo.max_order.push_back(std::log2(fo.max[k] / fo.max[k + 1]));
    if (!fo.exact && !(fo.max[k + 1] < fo.max[k])) fo.non_monotone = true;
  }
  return fo;
}

}  // namespace

std::vector<FieldOrder> self_convergence(const BVFunction& theta_of_r, const bondi::RunConfig& base,
                                         const std::vector<int>& resolutions, int regions) {
  if (resolutions.size() < 3) throw PreconditionError("convergence needs at least three resolutions");
  for (std::size_t k = 1; k < resolutions.size(); ++k) {
    if (resolutions[k] != 2 * resolutions[k - 1]) {
      throw PreconditionError("convergence resolutions must double at each level");
    }
  }
  if (base.placement != bondi::GridPlacement::uniform) {
    throw PreconditionError("convergence matching needs uniform grid placement");
  }
  std::vector<bondi::SliceState> finals;
  for (int n : resolutions) {
    bondi::RunConfig c = base;
    c.resolution = n;
    c.regrid_fraction = 0.0;  // inserted points would not line up across resolutions
    c.stop_on_dispersal = false;
    auto res = bondi::run(theta_of_r, c);
    if (res.report.outcome == bondi::Outcome::horizon) {
      throw PreconditionError("convergence run at N = " + std::to_string(n) + " formed a horizon");
    }
    finals.push_back(std::move(res.archive.back()));
  }
  for (const auto& f : finals) {
    if (std::abs(f.u - finals.front().u) > 1e-12) throw PreconditionError("runs ended at different u");
  }
  const Matched mt = match_final_slices(finals, resolutions, base.r_max);
  std::vector<std::size_t> all(mt.r0.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  std::vector<FieldOrder> out{orders_for("theta", "all", mt.theta, all), orders_for("m", "all", mt.m, all)};
  for (int g = 0; g < regions; ++g) {
    const double lo = base.r_max * g / regions, hi = base.r_max * (g + 1) / regions;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < mt.r0.size(); ++i) {
      if (mt.r0[i] >= lo && mt.r0[i] < hi) idx.push_back(i);
    }
    if (idx.empty()) continue;
    std::ostringstream name;
    name << "r0 in [" << lo << "," << hi << ")";
    out.push_back(orders_for("theta", name.str(), mt.theta, idx));
    out.push_back(orders_for("m", name.str(), mt.m, idx));
  }
  return out;
}

int cmd_evolve(const Invocation& inv) {
  const auto cfg = resolve_config(inv);
  prepare_out_dir(inv.out, inv.force);
  const auto o = evolve(cfg, inv.out);
  write_text(inv.out / "config.json", config::to_json(cfg));
  write_manifest(inv.out, "evolve", cfg, {o.archive, archive::index_path(o.archive), o.report, o.history});
  if (!inv.quiet) {
    const auto& r = o.result.report;
    std::cout << "outcome " << bondi::to_string(r.outcome) << "  peak mu " << r.peak_mu;
    if (r.outcome == bondi::Outcome::horizon) std::cout << "  u* " << r.u << "  r* " << r.r << "  m* " << r.m;
    std::cout << "\n";
  }
  return kOk;
}

namespace {

// vartheta(s) = theta(u0, a e^s) sampled from the archived slice at u0.
BVFunction vartheta_from_archive(const std::vector<bondi::SliceState>& archive, double u0, double a) {
  const auto it = std::min_element(archive.begin(), archive.end(), [&](const auto& x, const auto& y) {
    return std::abs(x.u - u0) < std::abs(y.u - u0);
  });
  std::vector<double> s, v;
  for (std::size_t i = 0; i < it->size(); ++i) {
    if (it->r[i] < a * (1.0 - 1e-12)) continue;
    s.push_back(std::log(it->r[i] / a));
    v.push_back(it->theta[i]);
  }
  if (s.size() < 2) throw MalformedData("archive slice does not cover the seed radius");
  if (s.front() > 0.0) {
    s.insert(s.begin(), 0.0);
    v.insert(v.begin(), bondi::sample_slice(*it, a).theta);
  }
  v.back() = v[v.size() - 2];  // flat tail
  return BVFunction::from_samples(Domain::s_line, s, v);
}

}  // namespace

int cmd_classify(const Invocation& inv) {
  const auto cfg = resolve_config(inv);
  if (inv.trace.empty() == inv.archive.empty()) {
    throw ConfigError("--trace/--archive", "give exactly one of a trace file or an archive");
  }
  exterior::BoundaryTrace trace;
  std::optional<BVFunction> vt;
  if (!inv.trace.empty()) {
    trace = exterior::read_trace_csv(inv.trace);
  } else {
    const auto arch = archive::read_archive(inv.archive);
    const auto curve = bondi::extract_incoming_curve(arch, cfg.seed_u, cfg.seed_radius);
    trace = exterior::trace_from_curve(curve);
    vt = vartheta_from_archive(arch, cfg.seed_u, cfg.seed_radius);
  }
  if (!inv.vartheta.empty()) vt = read_bv_file(inv.vartheta.string());
  const auto v = diagnostics::classify(trace, trace.theta0.front(), cfg.classify, vt ? &*vt : nullptr);
  prepare_out_dir(inv.out, true);
  const auto text = diagnostics::to_json(v);
  write_text(inv.out / "verdict.json", text);
  write_manifest(inv.out, "classify", cfg, {inv.out / "verdict.json"});
  if (!inv.quiet) std::cout << text << "\n";
  return v.verdict == diagnostics::Verdict::undecided ? kUndecided : kOk;
}

namespace {

PerturbationBasis basis_from(const config::SweepSection& w, const exterior::BoundaryTrace* g_trace) {
  PerturbationBasis b;
  b.f1 = default_f1(w.f1_end);
  if (!g_trace) {
    b.f2 = BVFunction::constant(Domain::s_line, 0.0);
    b.g_provenance.source = "none";
    return b;
  }
  std::vector<double> s, g;
  diagnostics::g_table(*g_trace, s, g);
  b.f2 = build_f2(s, g);
  b.g_provenance = {"trace", s.size(), s.empty() ? 0.0 : s.front(), s.empty() ? 0.0 : s.back()};
  return b;
}

}  // namespace

int cmd_sweep(const Invocation& inv) {
  const auto cfg = resolve_config(inv);
  const auto& w = cfg.sweep;
  if (!w.present) throw ConfigError("sweep", "config has no sweep section");
  sweep::SweepPlan plan;
  plan.mode = w.mode;
  plan.base = cfg.initial.build();
  plan.seed_radius = w.seed_radius;
  plan.run = cfg.run;
  plan.classify = cfg.classify;
  plan.classify_runs = w.classify_runs;
  plan.workers = inv.workers;
  std::optional<exterior::BoundaryTrace> g_trace;
  if (!w.trace_file.empty()) plan.trace = exterior::read_trace_csv(w.trace_file);
  if (!w.g_trace_file.empty()) {
    g_trace = exterior::read_trace_csv(w.g_trace_file);
  } else if (!w.trace_file.empty()) {
    g_trace = plan.trace;
  }
  plan.basis = basis_from(w, g_trace ? &*g_trace : nullptr);
  plan.points = w.amplitudes.empty() ? sweep::grid_points(w.lambda1, w.lambda2) : sweep::amplitude_points(w.amplitudes);

  prepare_out_dir(inv.out, true);  // the record file is resumable
  std::vector<fs::path> outputs;
  if (w.bracket) {
    const auto res = sweep::bisect_critical(plan, w.bracket->first, w.bracket->second, w.bisection);
    ojson j;
    j["converged"] = res.converged;
    j["horizon_amplitude"] = res.horizon_amplitude;
    j["dispersal_amplitude"] = res.dispersal_amplitude;
    j["relative_width"] = res.relative_width();
    j["runs"] = res.runs.size();
    j["resolution"] = res.resolution;
    j["escalated"] = res.escalated;
    j["reason"] = res.reason;
    j["horizon_record"] = ojson::parse(res.horizon_record.to_json());
    j["dispersal_record"] = ojson::parse(res.dispersal_record.to_json());
    write_text(inv.out / "bisection.json", j.dump(2));
    outputs.push_back(inv.out / "bisection.json");
    if (!inv.quiet) {
      std::cout << "critical amplitude in [" << std::setprecision(10)
                << std::min(res.dispersal_amplitude, res.horizon_amplitude) << ", "
                << std::max(res.dispersal_amplitude, res.horizon_amplitude) << "] after " << res.runs.size()
                << " runs\n";
    }
    write_manifest(inv.out, "sweep", cfg, outputs);
    return res.converged ? kOk : kUndecided;
  }
  const auto records = sweep::run_sweep(plan, inv.out / "records.jsonl");
  const auto summary = sweep::summarize(records);
  write_text(inv.out / "summary.json", summary.to_json());
  outputs = {inv.out / "records.jsonl", inv.out / "summary.json"};
  write_manifest(inv.out, "sweep", cfg, outputs);
  if (!inv.quiet) std::cout << summary.to_json() << "\n";
  return kOk;
}

namespace {

ojson entry_json(const diagnostics::EstimateEntry& e) {
  return {{"name", e.name},
          {"passed", e.passed()},
          {"max_violation", e.max_violation},
          {"location", e.location},
          {"violations", e.violations}};
}

ojson check_trace(const exterior::BoundaryTrace& trace, bool& ok) {
  ojson checks = ojson::array();
  for (const auto& e : diagnostics::lemma_checks(trace)) {
    ok = ok && e.passed();
    checks.push_back(entry_json(e));
  }
  return checks;
}

ojson check_archive(const fs::path& path, bool& ok) {
  const auto arch = archive::read_archive(path);
  ojson checks = ojson::array();
  for (const auto& e : {diagnostics::mass_monotonicity_in_r(arch), diagnostics::kappa_at_least_one(arch)}) {
    ok = ok && e.passed();
    checks.push_back(entry_json(e));
  }
  // Seed from the index metadata, else a quarter of the initial outer radius.
  double u0 = arch.front().u, a = 0.25 * arch.front().r.back();
  const auto idx_path = archive::index_path(path);
  if (fs::exists(idx_path)) {
    const auto idx = archive::read_index(idx_path);
    if (idx.metadata.count("seed_u")) u0 = std::stod(idx.metadata.at("seed_u"));
    if (idx.metadata.count("seed_radius")) a = std::stod(idx.metadata.at("seed_radius"));
  }
  const auto curve = bondi::extract_incoming_curve(arch, u0, a);
  const auto along = diagnostics::mass_monotonicity_along(curve);
  ok = ok && along.passed();
  checks.push_back(entry_json(along));
  if (curve.samples.size() >= 2) {
    for (auto& c : check_trace(exterior::trace_from_curve(curve), ok)) checks.push_back(c);
  }
  return checks;
}

}  // namespace

// CSVs that evolve and convergence write next to their archives; not traces.
bool is_run_output_csv(const fs::path& f) {
  std::ifstream in(f);
  std::string header;
  std::getline(in, header);
  return header.rfind("u,max_mu,", 0) == 0 || header.rfind("field,region,", 0) == 0;
}

int cmd_check(const Invocation& inv) {
  if (inv.corpus.empty()) throw ConfigError("--corpus", "required");
  if (!fs::is_directory(inv.corpus)) throw IoError("corpus directory " + inv.corpus.string() + " not found");
  std::vector<fs::path> files;
  ojson skipped = ojson::array();
  for (const auto& e : fs::directory_iterator(inv.corpus)) {
    const auto ext = e.path().extension();
    if (!e.is_regular_file() || (ext != ".ncar" && ext != ".csv")) continue;
    if (ext == ".csv" && is_run_output_csv(e.path())) {
      skipped.push_back(e.path().filename().string());
      continue;
    }
    files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::sort(skipped.begin(), skipped.end());
  bool all_ok = true;
  ojson list = ojson::array();
  for (const auto& f : files) {
    ojson item;
    item["path"] = f.filename().string();
    bool ok = true;
    try {
      item["checks"] = f.extension() == ".ncar" ? check_archive(f, ok) : check_trace(exterior::read_trace_csv(f), ok);
    } catch (const std::exception& e) {
      ok = false;
      item["error"] = e.what();
    }
    item["passed"] = ok;
    all_ok = all_ok && ok;
    list.push_back(item);
  }
  ojson report;
  report["files"] = list;
  report["skipped"] = skipped;
  report["passed"] = all_ok;
  prepare_out_dir(inv.out, true);
  write_text(inv.out / "check.json", report.dump(2));
  if (!inv.quiet) {
    for (const auto& item : list) {
      std::cout << (item["passed"].get<bool>() ? "pass " : "FAIL ") << item["path"].get<std::string>() << "\n";
    }
  }
  return all_ok ? kOk : kCheckFailed;
}

int cmd_convergence(const Invocation& inv) {
  const auto cfg = resolve_config(inv);
  std::vector<int> ns = inv.resolutions.empty() ? cfg.resolutions : inv.resolutions;
  if (ns.empty()) ns = {cfg.run.resolution, 2 * cfg.run.resolution, 4 * cfg.run.resolution};
  const BVFunction data = cfg.initial.build();
  const BVFunction theta = data.domain() == Domain::s_line ? s_profile_to_radius(data, cfg.seed_radius) : data;
  const auto orders = self_convergence(theta, cfg.run, ns);
  prepare_out_dir(inv.out, true);
  const fs::path csv = inv.out / "convergence.csv";
  std::ofstream f(csv, std::ios::trunc);
  if (!f) throw IoError("cannot write " + csv.string());
  f << "field,region,pair,l2_difference,max_difference,l2_order,max_order,flag\n" << std::setprecision(10);
  bool flagged = false;
  for (const auto& o : orders) {
    for (std::size_t k = 0; k < o.l2.size(); ++k) {
      f << o.field << ",\"" << o.region << "\"," << ns[k] << '-' << ns[k + 1] << ',' << o.l2[k] << ',' << o.max[k]
        << ',';
      if (k > 0 && !o.exact) f << o.l2_order[k - 1] << ',' << o.max_order[k - 1];
      else if (k > 0) f << "exact,exact";
      else f << ',';
      f << ',' << (o.non_monotone ? "non-monotone" : "") << '\n';
    }
    flagged = flagged || (o.non_monotone && o.region == "all");
    if (!inv.quiet && o.region == "all") {
      std::cout << o.field << ": ";
      if (o.exact) std::cout << "exact";
      for (double q : o.l2_order) std::cout << "order " << std::setprecision(3) << q << "  ";
      if (o.non_monotone) std::cout << " (non-monotone)";
      std::cout << "\n";
    }
  }
  f.close();
  write_manifest(inv.out, "convergence", cfg, {csv});
  return flagged ? kCheckFailed : kOk;
}

int dispatch(const Invocation& inv) {
  try {
    if (inv.subcommand == "evolve") return cmd_evolve(inv);
    if (inv.subcommand == "classify") return cmd_classify(inv);
    if (inv.subcommand == "sweep") return cmd_sweep(inv);
    if (inv.subcommand == "check") return cmd_check(inv);
    if (inv.subcommand == "convergence") return cmd_convergence(inv);
    std::cerr << "unknown subcommand '" << inv.subcommand << "'\n";
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const PreconditionError& e) {
    std::cerr << "precondition failed: " << e.what() << "\n";
    return kPrecondition;
  } catch (const MalformedData& e) {
    std::cerr << "malformed input: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace nullcollapse::cli
