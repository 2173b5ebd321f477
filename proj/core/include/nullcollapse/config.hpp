#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nullcollapse/bondi.hpp"
#include "nullcollapse/diagnostics.hpp"
#include "nullcollapse/exterior.hpp"
#include "nullcollapse/initial_data.hpp"
#include "nullcollapse/sweep.hpp"

// Versioned JSON run configuration. Unknown keys and wrong types are
// rejected with a ConfigError naming the dotted field path.
namespace nullcollapse::config {

inline constexpr int kSchemaVersion = 1;

/// One profile: either a BV file or a built-in shape.
///   {"file": "theta.bv"}
///   {"shape": "gaussian", "domain": "r", "amplitude": .3, "center": .5, "width": .1, "extent": 1}
///   {"shape": "annulus", "domain": "r", "amplitude": 3, "inner": .2, "outer": .24}
///   {"shape": "constant", "domain": "r", "value": .5}
///   {"shape": "zero"}
struct ProfileSpec {
  std::string shape = "zero";
  std::filesystem::path file;
  Domain domain = Domain::r_half_line;
  double amplitude = 0.0, center = 0.0, width = 1.0, extent = 1.0;
  double inner = 0.0, outer = 1.0, value = 0.0;
  int samples = 4096;

  BVFunction build() const;
};

struct SweepSection {
  bool present = false;
  sweep::Mode mode = sweep::Mode::trace;
  std::vector<double> lambda1{0.0}, lambda2{0.0}, amplitudes;
  std::filesystem::path trace_file;    // trace mode
  std::filesystem::path g_trace_file;  // trace whose g table builds f2 (defaults to trace_file)
  double f1_end = 30.0;
  double seed_radius = 0.25;
  bool classify_runs = true;
  std::optional<std::pair<double, double>> bracket;  // amplitude bisection
  sweep::BisectionOptions bisection;
};

struct Config {
  int version = kSchemaVersion;
  std::filesystem::path source;  // file the config came from (relative paths resolve beside it)
  ProfileSpec initial;
  bondi::RunConfig run;
  exterior::ExteriorConfig exterior;
  exterior::BoundaryOptions boundary;
  diagnostics::ClassifyOptions classify;
  diagnostics::EstimateConstants constants;
  double seed_u = 0.0;       // curve seed for trace extraction
  double seed_radius = 0.25;
  SweepSection sweep;
  std::vector<int> resolutions;  // convergence study

  void validate() const;
};

Config parse(const std::string& text, const std::filesystem::path& source = {});
Config load(const std::filesystem::path& path);
std::string to_json(const Config& c);

/// Tolerance profiles adjust classifier and step-control tolerances:
/// "default", "strict" (tighter) and "loose".
void apply_tolerance_profile(Config& c, const std::string& profile);

// Environment variable holding the default config path.
inline constexpr const char* kConfigEnv = "NULLCOLLAPSE_CONFIG";

}  // namespace nullcollapse::config
