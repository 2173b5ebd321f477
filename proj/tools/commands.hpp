#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nullcollapse/bondi.hpp"
#include "nullcollapse/config.hpp"

namespace nullcollapse::cli {

// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,       // unexpected internal error
  kUsage = 2,         // bad flags or config schema violation
  kIo = 3,            // missing or unreadable input, unwritable output
  kUndecided = 4,     // classifier could not decide (short trace, unsettled limits)
  kCheckFailed = 5,   // an invariant or inequality check failed
  kPrecondition = 6,  // e.g. degenerate bisection bracket, too few resolutions
};

struct Invocation {
  std::string subcommand;
  std::filesystem::path config;  // empty: defaults (or the environment default)
  std::filesystem::path out = "out";
  std::optional<int> resolution;
  int workers = 1;
  std::string tolerance_profile = "default";
  bool force = false;  // allow a non-empty output directory
  bool quiet = false;
  // classify
  std::filesystem::path trace, archive, vartheta;
  // check
  std::filesystem::path corpus;
  // convergence
  std::vector<int> resolutions;
};

// Config named by the invocation, else $NULLCOLLAPSE_CONFIG, else defaults,
// with the resolution override and tolerance profile applied.
config::Config resolve_config(const Invocation& inv);

// Creates the output directory; refuses a non-empty one unless `allow_existing`.
void prepare_out_dir(const std::filesystem::path& out, bool allow_existing);

// manifest.json listing the config and every output with its size and checksum.
void write_manifest(const std::filesystem::path& out, const std::string& subcommand, const config::Config& cfg,
                    const std::vector<std::filesystem::path>& outputs);

struct EvolveOutputs {
  bondi::RunResult result;
  std::filesystem::path archive, report, history;
};

// Runs the Bondi solver on the configured data and writes archive, report and history CSV.
EvolveOutputs evolve(const config::Config& cfg, const std::filesystem::path& out);

struct FieldOrder {
  std::string field;   // "theta" or "m"
  std::string region;  // "all" or "r0 in [a,b)"
  std::vector<double> l2, max;        // successive differences, coarse pair first
  std::vector<double> l2_order, max_order;
  bool exact = false;          // differences at rounding level
  bool non_monotone = false;   // some difference failed to shrink
};

/// Self-convergence of the final slices of runs at the given resolutions
/// (each double the previous), matched by initial radius on a uniform grid.
std::vector<FieldOrder> self_convergence(const BVFunction& theta_of_r, const bondi::RunConfig& base,
                                         const std::vector<int>& resolutions, int regions = 4);

int cmd_evolve(const Invocation& inv);
int cmd_classify(const Invocation& inv);
int cmd_sweep(const Invocation& inv);
int cmd_check(const Invocation& inv);
int cmd_convergence(const Invocation& inv);

// Dispatches on inv.subcommand and maps exceptions to exit codes.
int dispatch(const Invocation& inv);

}  // namespace nullcollapse::cli
