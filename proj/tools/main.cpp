#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
  using nullcollapse::cli::Invocation;
  CLI::App app{"nullcollapse: spherically symmetric scalar-field collapse on null cones"};
  app.require_subcommand(1);
  Invocation inv;
  std::string config, out = "out", profile = "default";
  int resolution = 0;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "JSON config (default: $NULLCOLLAPSE_CONFIG)");
    sub->add_option("--out", out, "output directory")->capture_default_str();
    sub->add_option("--resolution", resolution, "override the grid resolution")->check(CLI::PositiveNumber);
    sub->add_option("--tolerance-profile", profile, "default, strict or loose")->capture_default_str();
    sub->add_flag("--quiet", inv.quiet, "suppress console summaries");
  };

  auto* evolve = app.add_subcommand("evolve", "run the Bondi solver and archive the slices");
  common(evolve);
  evolve->add_flag("--force", inv.force, "reuse a non-empty output directory");

  std::string trace, archive, vartheta;
  auto* classify = app.add_subcommand("classify", "classify a boundary trace");
  common(classify);
  classify->add_option("--trace", trace, "trace CSV (t,kappa0,theta0,zeta0,gamma,I)");
  classify->add_option("--archive", archive, "archive; the trace is extracted along the configured seed curve");
  classify->add_option("--vartheta", vartheta, "initial data on the s-line (BV file) for the h/g test");

  auto* sweep = app.add_subcommand("sweep", "run a family of points or bisect an amplitude bracket");
  common(sweep);
  sweep->add_option("--workers", inv.workers, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();

  std::string corpus;
  auto* check = app.add_subcommand("check", "run the invariant suite over a corpus of archives and traces");
  common(check);
  check->add_option("--corpus", corpus, "directory of .ncar archives and .csv traces")->required();

  auto* convergence = app.add_subcommand("convergence", "self-convergence orders over doubling resolutions");
  common(convergence);
  convergence->add_option("--resolutions", inv.resolutions, "e.g. 256,512,1024")->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  inv.subcommand = app.get_subcommands().front()->get_name();
  inv.config = config;
  inv.out = out;
  if (resolution > 0) inv.resolution = resolution;
  inv.tolerance_profile = profile;
  inv.trace = trace;
  inv.archive = archive;
  inv.vartheta = vartheta;
  inv.corpus = corpus;
  return nullcollapse::cli::dispatch(inv);
}
