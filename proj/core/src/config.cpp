#include "nullcollapse/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "nullcollapse/errors.hpp"

namespace nullcollapse::config {

using nlohmann::json;

namespace {

// Walks one JSON object, remembering its dotted path and which keys were read.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  template <typename T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(at(key), "wrong type");
    }
  }

  void get(const std::string& key, std::filesystem::path& out) {
    std::string s;
    get(key, s);
    if (!s.empty()) out = s;
  }

  // Optional nested object; the reader only runs when the key is present.
  template <typename F>
  void optional_child(const std::string& key, F&& read) {
    seen_.insert(key);
    if (j_.contains(key)) read(Section(j_.at(key), at(key)));
  }

  // Rejects keys nobody asked for.
  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError(at(k), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename E, typename F>
void get_enum(Section& s, const std::string& key, E& out, F&& from) {
  if (!s.has(key)) return;
  std::string text;
  s.get(key, text);
  try {
    out = from(text);
  } catch (const Error& e) {
    throw ConfigError(s.at(key), e.what());
  }
}

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& source) {
  if (p.empty() || p.is_absolute() || source.empty()) return p;
  return source.parent_path() / p;
}

ProfileSpec read_profile(Section s, const std::filesystem::path& source) {
  ProfileSpec p;
  s.get("shape", p.shape);
  s.get("file", p.file);
  if (!p.file.empty()) p.shape = "file";
  get_enum(s, "domain", p.domain, domain_from_string);
  s.get("amplitude", p.amplitude);
  s.get("center", p.center);
  s.get("width", p.width);
  s.get("extent", p.extent);
  s.get("inner", p.inner);
  s.get("outer", p.outer);
  s.get("value", p.value);
  s.get("samples", p.samples);
  s.finish();
  p.file = resolve(p.file, source);
  static const std::set<std::string> shapes{"file", "gaussian", "annulus", "constant", "zero"};
  if (!shapes.count(p.shape)) throw ConfigError(s.at("shape"), "unknown shape '" + p.shape + "'");
  if (p.samples < 3) throw ConfigError(s.at("samples"), "must be >= 3");
  if (p.shape == "gaussian" && !(p.width > 0.0)) throw ConfigError(s.at("width"), "must be positive");
  if (p.shape == "annulus" && !(p.outer > p.inner)) throw ConfigError(s.at("outer"), "must exceed inner");
  return p;
}

void read_run(Section s, bondi::RunConfig& r) {
  s.get("resolution", r.resolution);
  get_enum(s, "placement", r.placement, bondi::placement_from_string);
  s.get("r_max", r.r_max);
  s.get("r_min", r.r_min);
  get_enum(s, "center", r.center, bondi::center_model_from_string);
  get_enum(s, "gauge", r.gauge, bondi::gauge_from_string);
  s.get("u_start", r.u_start);
  s.get("u_max", r.u_max);
  s.get("cfl", r.cfl);
  s.get("step_tolerance", r.step_tolerance);
  s.get("min_step_fraction", r.min_step_fraction);
  s.get("retire_fraction", r.retire_fraction);
  s.get("horizon_epsilon", r.horizon_epsilon);
  s.get("regrid_fraction", r.regrid_fraction);
  s.get("min_points", r.min_points);
  s.get("center_landing", r.center_landing);
  s.get("retire_factor", r.retire_factor);
  s.get("stop_on_dispersal", r.stop_on_dispersal);
  s.get("dispersal_ratio", r.dispersal_ratio);
  s.get("dispersal_window", r.dispersal_window);
  s.get("dispersal_floor", r.dispersal_floor);
  s.get("output_every", r.output_every);
  s.finish();
}

void read_exterior(Section s, exterior::ExteriorConfig& e) {
  s.get("s_max", e.s_max);
  s.get("points", e.points);
  s.get("cfl", e.cfl);
  s.get("kappa_cap", e.kappa_cap);
  s.get("corrector_passes", e.corrector_passes);
  s.finish();
}

void read_boundary(Section s, exterior::BoundaryOptions& b) {
  s.get("dt", b.dt);
  s.get("kappa_cap", b.kappa_cap);
  s.get("max_growth", b.max_growth);
  s.finish();
  if (!(b.dt > 0.0)) throw ConfigError(s.at("dt"), "must be positive");
  if (!(b.kappa_cap > 1.0)) throw ConfigError(s.at("kappa_cap"), "must exceed 1");
  if (!(b.max_growth > 0.0)) throw ConfigError(s.at("max_growth"), "must be positive");
}

void read_classify(Section s, diagnostics::ClassifyOptions& c) {
  s.get("convergence_tol", c.convergence_tol);
  s.get("divergence_ratio", c.divergence_ratio);
  s.get("gamma_slope", c.gamma_slope);
  s.get("equality_tol", c.equality_tol);
  s.get("min_samples", c.min_samples);
  s.get("min_time", c.min_time);
  s.optional_child("theorem31", [&](Section t) {
    t.get("growth_factor", c.theorem31.growth_factor);
    t.get("min_decades", c.theorem31.min_decades);
    t.get("samples_per_decade", c.theorem31.samples_per_decade);
    t.get("log_s_floor", c.theorem31.log_s_floor);
    t.get("floor_margin_decades", c.theorem31.floor_margin_decades);
    t.finish();
    if (!(c.theorem31.growth_factor > 1.0)) throw ConfigError(t.at("growth_factor"), "must exceed 1");
    if (c.theorem31.min_decades < 1) throw ConfigError(t.at("min_decades"), "must be >= 1");
    if (c.theorem31.samples_per_decade < 1) throw ConfigError(t.at("samples_per_decade"), "must be >= 1");
  });
  s.finish();
  if (!(c.convergence_tol > 0.0)) throw ConfigError(s.at("convergence_tol"), "must be positive");
  if (!(c.divergence_ratio > 0.0 && c.divergence_ratio <= 1.0)) {
    throw ConfigError(s.at("divergence_ratio"), "must lie in (0, 1]");
  }
  if (!(c.equality_tol >= 0.0)) throw ConfigError(s.at("equality_tol"), "must be >= 0");
}

void read_sweep(Section s, SweepSection& w, const std::filesystem::path& source) {
  w.present = true;
  get_enum(s, "mode", w.mode, sweep::mode_from_string);
  s.get("lambda1", w.lambda1);
  s.get("lambda2", w.lambda2);
  s.get("amplitudes", w.amplitudes);
  s.get("trace", w.trace_file);
  s.get("g_trace", w.g_trace_file);
  s.get("f1_end", w.f1_end);
  s.get("seed_radius", w.seed_radius);
  s.get("classify_runs", w.classify_runs);
  if (s.has("bracket")) {
    std::vector<double> b;
    s.get("bracket", b);
    if (b.size() != 2 || !(b[0] < b[1])) throw ConfigError(s.at("bracket"), "expected [lo, hi] with lo < hi");
    w.bracket = std::make_pair(b[0], b[1]);
  }
  s.optional_child("bisection", [&](Section b) {
    b.get("rel_tol", w.bisection.rel_tol);
    b.get("max_runs", w.bisection.max_runs);
    b.get("escalation_factor", w.bisection.escalation_factor);
    b.finish();
  });
  s.finish();
  w.trace_file = resolve(w.trace_file, source);
  w.g_trace_file = resolve(w.g_trace_file, source);
  if (w.lambda1.empty()) throw ConfigError(s.at("lambda1"), "must not be empty");
  if (w.lambda2.empty()) throw ConfigError(s.at("lambda2"), "must not be empty");
  if (!(w.seed_radius > 0.0)) throw ConfigError(s.at("seed_radius"), "must be positive");
}

}  // namespace

BVFunction ProfileSpec::build() const {
  if (shape == "file") return read_bv_file(file.string());
  if (shape == "gaussian") return gaussian_pulse(domain, amplitude, center, width, extent, samples);
  if (shape == "annulus") return annular_bump(domain, amplitude, inner, outer, samples);
  if (shape == "constant") return BVFunction::constant(domain, value);
  return BVFunction::constant(domain, 0.0);
}

void Config::validate() const {
  if (version != kSchemaVersion) throw ConfigError("version", "unsupported schema version");
  run.validate();
  exterior.validate();
  constants.validate();
  if (!(seed_radius > 0.0)) throw ConfigError("seed.radius", "must be positive");
  for (int n : resolutions) {
    if (n < 16) throw ConfigError("resolutions", "every resolution must be >= 16");
  }
}

Config parse(const std::string& text, const std::filesystem::path& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
  }
  Config c;
  c.source = source;
  Section root(j, "");
  if (!root.has("version")) throw ConfigError("version", "missing schema version");
  root.get("version", c.version);
  if (c.version != kSchemaVersion) {
    throw ConfigError("version", "unsupported schema version " + std::to_string(c.version));
  }
  root.optional_child("initial_data", [&](Section s) { c.initial = read_profile(s, source); });
  root.optional_child("run", [&](Section s) { read_run(s, c.run); });
  root.optional_child("exterior", [&](Section s) { read_exterior(s, c.exterior); });
  root.optional_child("boundary", [&](Section s) { read_boundary(s, c.boundary); });
  root.optional_child("classify", [&](Section s) { read_classify(s, c.classify); });
  root.optional_child("constants", [&](Section k) {
    k.get("c0", c.constants.c0);
    k.get("c1", c.constants.c1);
    k.get("horizon_epsilon", c.constants.horizon_epsilon);
    k.finish();
  });
  root.optional_child("seed", [&](Section s) {
    s.get("u", c.seed_u);
    s.get("radius", c.seed_radius);
    s.finish();
  });
  root.optional_child("sweep", [&](Section s) { read_sweep(s, c.sweep, source); });
  root.get("resolutions", c.resolutions);
  root.finish();
  c.validate();
  return c;
}

Config load(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse(ss.str(), path);
}

std::string to_json(const Config& c) {
  nlohmann::ordered_json j;
  j["version"] = c.version;
  auto& p = j["initial_data"];
  p["shape"] = c.initial.shape;
  if (c.initial.shape == "file") p["file"] = c.initial.file.string();
  p["domain"] = to_string(c.initial.domain);
  p["amplitude"] = c.initial.amplitude;
  p["center"] = c.initial.center;
  p["width"] = c.initial.width;
  p["extent"] = c.initial.extent;
  p["inner"] = c.initial.inner;
  p["outer"] = c.initial.outer;
  p["value"] = c.initial.value;
  p["samples"] = c.initial.samples;
  const auto& r = c.run;
  j["run"] = {{"resolution", r.resolution},
              {"placement", bondi::to_string(r.placement)},
              {"r_max", r.r_max},
              {"r_min", r.r_min},
              {"center", bondi::to_string(r.center)},
              {"gauge", bondi::to_string(r.gauge)},
              {"u_start", r.u_start},
              {"u_max", r.u_max},
              {"cfl", r.cfl},
              {"step_tolerance", r.step_tolerance},
              {"min_step_fraction", r.min_step_fraction},
              {"retire_fraction", r.retire_fraction},
              {"horizon_epsilon", r.horizon_epsilon},
              {"regrid_fraction", r.regrid_fraction},
              {"min_points", r.min_points},
              {"center_landing", r.center_landing},
              {"retire_factor", r.retire_factor},
              {"stop_on_dispersal", r.stop_on_dispersal},
              {"dispersal_ratio", r.dispersal_ratio},
              {"dispersal_window", r.dispersal_window},
              {"dispersal_floor", r.dispersal_floor},
              {"output_every", r.output_every}};
  j["exterior"] = {{"s_max", c.exterior.s_max},
                   {"points", c.exterior.points},
                   {"cfl", c.exterior.cfl},
                   {"kappa_cap", c.exterior.kappa_cap},
                   {"corrector_passes", c.exterior.corrector_passes}};
  j["boundary"] = {{"dt", c.boundary.dt}, {"kappa_cap", c.boundary.kappa_cap}, {"max_growth", c.boundary.max_growth}};
  const auto& k = c.classify;
  j["classify"] = {{"convergence_tol", k.convergence_tol},
                   {"divergence_ratio", k.divergence_ratio},
                   {"gamma_slope", k.gamma_slope},
                   {"equality_tol", k.equality_tol},
                   {"min_samples", k.min_samples},
                   {"min_time", k.min_time},
                   {"theorem31",
                    {{"growth_factor", k.theorem31.growth_factor},
                     {"min_decades", k.theorem31.min_decades},
                     {"samples_per_decade", k.theorem31.samples_per_decade},
                     {"log_s_floor", k.theorem31.log_s_floor},
                     {"floor_margin_decades", k.theorem31.floor_margin_decades}}}};
  j["constants"] = {{"c0", c.constants.c0}, {"c1", c.constants.c1}, {"horizon_epsilon", c.constants.horizon_epsilon}};
  j["seed"] = {{"u", c.seed_u}, {"radius", c.seed_radius}};
  if (c.sweep.present) {
    auto& w = j["sweep"];
    w["mode"] = sweep::to_string(c.sweep.mode);
    w["lambda1"] = c.sweep.lambda1;
    w["lambda2"] = c.sweep.lambda2;
    w["amplitudes"] = c.sweep.amplitudes;
    if (!c.sweep.trace_file.empty()) w["trace"] = c.sweep.trace_file.string();
    if (!c.sweep.g_trace_file.empty()) w["g_trace"] = c.sweep.g_trace_file.string();
    w["f1_end"] = c.sweep.f1_end;
    w["seed_radius"] = c.sweep.seed_radius;
    w["classify_runs"] = c.sweep.classify_runs;
    if (c.sweep.bracket) w["bracket"] = {c.sweep.bracket->first, c.sweep.bracket->second};
    w["bisection"] = {{"rel_tol", c.sweep.bisection.rel_tol},
                      {"max_runs", c.sweep.bisection.max_runs},
                      {"escalation_factor", c.sweep.bisection.escalation_factor}};
  }
  if (!c.resolutions.empty()) j["resolutions"] = c.resolutions;
  return j.dump(2);
}

void apply_tolerance_profile(Config& c, const std::string& profile) {
  if (profile == "default") return;
  if (profile == "strict") {
    c.run.step_tolerance *= 0.5;
    c.classify.convergence_tol *= 0.1;
    c.classify.equality_tol *= 0.1;
    c.classify.theorem31.growth_factor = 1.0 + 2.0 * (c.classify.theorem31.growth_factor - 1.0);
  } else if (profile == "loose") {
    c.run.step_tolerance *= 2.0;
    c.classify.convergence_tol *= 10.0;
    c.classify.equality_tol *= 10.0;
    c.classify.theorem31.growth_factor = 1.0 + 0.5 * (c.classify.theorem31.growth_factor - 1.0);
  } else {
    throw ConfigError("--tolerance-profile", "unknown profile '" + profile + "' (default, strict, loose)");
  }
}

}  // namespace nullcollapse::config
