#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "nullcollapse/bondi.hpp"

// Exterior region s, t >= 0 in the dimensionless coordinates
//   u = -2a exp(-t),  r = a exp(s - t),
// where the incoming null curve r = a exp(-t) (s = 0) carries the gauge
// exp(nu - lambda) = 1. Fields: kappa = exp(2 lambda), beta = 1 - exp(nu - lambda - s),
// theta and zeta as in Bondi coordinates.
namespace nullcollapse::exterior {

struct BoundaryValues {
  double kappa0 = 1.0;
  double theta0 = 0.0;
  double zeta0 = 0.0;
};

/// History on s = 0. gamma = int (kappa0 - 1) dt, I = -int exp(-gamma) zeta0 dt.
struct BoundaryTrace {
  std::vector<double> t, kappa0, theta0, zeta0, mu0, gamma, I;
  bool truncated = false;   // kappa0 blew up (or the source curve ended) before the requested time
  std::string note;
  double identity_residual = 0.0;  // max |theta0 - exp(gamma) (theta0(0) - I)|

  std::size_t size() const { return t.size(); }
  double t_end() const { return t.back(); }
  // Local cubic interpolation of kappa0, theta0, zeta0 at time tt (clamped to the trace).
  BoundaryValues at(double tt) const;
  void validate() const;
};

struct BoundaryOptions {
  double dt = 1e-3;          // output spacing
  double kappa_cap = 1e8;    // beyond this kappa0 counts as blown up
  double max_growth = 0.02;  // internal substeps keep dt * kappa0 below this
};

/// RK4 integration of
///   dkappa0/dt = kappa0 (kappa0 - 1 - zeta0^2),  dtheta0/dt = (kappa0 - 1) theta0 + zeta0
/// together with the gamma and I quadratures.
BoundaryTrace boundary_evolve(double kappa0_initial, double theta0_initial,
                              const std::function<double(double)>& zeta0, double t_end,
                              const BoundaryOptions& opts = {});

// Fills gamma, I, mu0 and the identity residual from t, kappa0, theta0, zeta0 (trapezoidal).
void accumulate(BoundaryTrace& trace);

/// Trace with prescribed gamma and I: kappa0 = 1 + gamma', zeta0 = -exp(gamma) I',
/// theta0 = exp(gamma) (theta0(0) - I).
BoundaryTrace manufactured_trace(const std::function<double(double)>& gamma,
                                 const std::function<double(double)>& dgamma,
                                 const std::function<double(double)>& I,
                                 const std::function<double(double)>& dI, double theta0_initial,
                                 double t_end, double dt);

/// Boundary trace along an incoming curve extracted from a Bondi archive:
/// t = log(a / r) with a the seed radius.
BoundaryTrace trace_from_curve(const bondi::CharacteristicTrace& curve);

void write_trace_csv(std::ostream& out, const BoundaryTrace& trace);
void write_trace_csv(const std::filesystem::path& path, const BoundaryTrace& trace);
BoundaryTrace read_trace_csv(std::istream& in);
BoundaryTrace read_trace_csv(const std::filesystem::path& path);

struct ExteriorState {
  double t = 0.0;
  std::vector<double> s, kappa, beta, theta, zeta;
  std::size_t size() const { return s.size(); }
};

struct ExteriorConfig {
  double s_max = 1.0;
  int points = 257;           // nodes on [0, s_max]
  double cfl = 0.5;           // dt = cfl * ds
  double kappa_cap = 1e6;     // horizon-in-exterior signal
  int corrector_passes = 2;   // fixed-point passes for the corrector foot point
  void validate() const;
  double ds() const { return s_max / (points - 1); }
};

struct RebuildStatus {
  bool horizon = false;
  std::size_t index = 0;
};

/// Rebuilds kappa, beta, zeta from theta and the boundary values by outward
/// trapezoidal integration of
///   d(1/kappa)/ds = 1 - (1 + theta^2)/kappa,  d log(1 - beta)/ds = kappa - 2,
///   dzeta/ds = -(kappa - 1) zeta - theta.
RebuildStatus rebuild(ExteriorState& state, const BoundaryValues& b, double kappa_cap);

// Initial state from theta(0, s) sampled on the configured grid.
ExteriorState initial_state(const std::function<double(double)>& theta_of_s,
                            const BoundaryValues& b0, const ExteriorConfig& config);

struct ExteriorStepResult {
  ExteriorState next;
  RebuildStatus status;
};

/// One semi-Lagrangian step: theta is carried along ds/dt = beta by a
/// predictor-corrector with monotone cubic foot-point interpolation, then
/// kappa, beta, zeta are rebuilt on the new slice.
ExteriorStepResult step_exterior(const ExteriorState& state, const BoundaryValues& next_boundary,
                                 double dt, const ExteriorConfig& config);

struct ExteriorSample {
  double t, s, kappa, beta, theta, zeta;
};

// Field history along one characteristic ds/dt = beta starting at s0.
struct CharacteristicHistory {
  double s0 = 0.0;
  std::vector<ExteriorSample> samples;
};

struct ExteriorRun {
  std::vector<ExteriorState> outputs;  // at the requested output times (and t = 0)
  std::vector<CharacteristicHistory> characteristics;
  bool horizon = false;
  double t_reached = 0.0;
  std::size_t steps = 0;
};

/// Evolves from `initial` to the last output time, stopping early on a
/// horizon signal. Steps are shortened to land on every output time; the
/// listed characteristics are followed with Heun's method.
ExteriorRun run_exterior(const ExteriorState& initial, const BoundaryTrace& trace,
                         const std::vector<double>& output_times, const std::vector<double>& seeds,
                         const ExteriorConfig& config);

struct IntegralForms {
  std::vector<double> nu_plus_lambda;     // log kappa0 + int theta^2
  std::vector<double> exp_nml_plus_s;     // exp(nu - lambda + s) = 1 + int exp(nu + lambda + s')
  std::vector<double> zeta;               // (zeta0 + xi) exp(-(nu - lambda)), xi = -int exp(nu - lambda) theta
  std::vector<double> kappa;              // exp((nu + lambda) - (nu - lambda))
  std::vector<double> beta;               // 1 - exp(nu - lambda - s)
};

IntegralForms integral_forms(const ExteriorState& state, const BoundaryValues& b);

/// Bondi archive data mapped onto exterior nodes: fields[k] is the slice at
/// times[k] sampled at s-nodes where the archive covers r = r_c exp(s).
struct MappedArchive {
  std::vector<double> times;
  std::vector<double> s;
  std::vector<std::vector<double>> kappa, beta, theta, zeta;  // NaN where uncovered
  // Cubic Lagrange interpolation in t at node j; NaN if uncovered.
  double at(const std::vector<std::vector<double>>& field, double t, std::size_t j) const;
  double t_end() const { return times.back(); }
};

MappedArchive map_archive(const std::vector<bondi::SliceState>& archive,
                          const bondi::CharacteristicTrace& curve, const std::vector<double>& s_nodes);

struct FieldDiscrepancy {
  double kappa = 0.0, beta = 0.0, theta = 0.0, zeta = 0.0;
  double max() const;
};

struct CrosscheckReport {
  FieldDiscrepancy discrepancy;
  double t_overlap = 0.0;
  std::size_t compared = 0;
  BoundaryTrace trace;
  ExteriorRun exterior;
  MappedArchive mapped;
  std::vector<double> times;
};

struct CrosscheckOptions {
  double u0 = 0.0;         // archived slice carrying the seed
  double a = 0.25;         // seed radius of the s = 0 curve
  double t_max = 3.0;      // latest comparison time
  int output_count = 16;   // comparison times spread over (0, t_overlap]
  ExteriorConfig exterior; // s_max is clipped to the archive's initial coverage
};

/// Maps a Bondi archive through the dimensionless coordinates and compares it
/// with an exterior run driven by the boundary trace extracted from the same
/// archive along the curve through (u0, a).
CrosscheckReport crosscheck_bondi(const std::vector<bondi::SliceState>& archive,
                                  const CrosscheckOptions& opts);

}  // namespace nullcollapse::exterior
