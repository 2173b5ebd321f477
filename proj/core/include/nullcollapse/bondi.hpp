#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "nullcollapse/initial_data.hpp"

namespace nullcollapse::bondi {

// How theta is modelled on the innermost interval [0, r_0]: theta ~ r^p.
enum class CenterModel {
  regular,          // p = 1, smooth data with a regular center
  scale_invariant,  // p = 0, data that is constant (in theta) near r = 0
  adaptive,         // p estimated from the two innermost points, clamped to [0, 2]
};

enum class Gauge {
  center,  // nu(u, 0) = lambda(u, 0) = 0: u is proper time at the center
  outer,   // nu = lambda on the outermost grid point (the outermost curve is u = -2r-like)
};

enum class GridPlacement { uniform, geometric };

enum class Outcome { dispersal, horizon, max_time_reached };

std::string to_string(Outcome o);
std::string to_string(CenterModel m);
std::string to_string(Gauge g);
std::string to_string(GridPlacement p);
CenterModel center_model_from_string(const std::string& s);
Gauge gauge_from_string(const std::string& s);
GridPlacement placement_from_string(const std::string& s);
Outcome outcome_from_string(const std::string& s);

/// Fields on one outgoing cone u = const. Grid points ride incoming null
/// curves; `label` identifies the curve a point has followed since the
/// initial cone (inserted points carry the mean of their neighbours' labels).
struct SliceState {
  double u = 0.0;
  std::vector<double> label;
  std::vector<double> r;
  std::vector<double> phi;
  std::vector<double> theta;
  std::vector<double> zeta;
  std::vector<double> m;
  std::vector<double> lambda;
  std::vector<double> nu;

  std::size_t size() const { return r.size(); }
  double mu(std::size_t i) const { return 2.0 * m[i] / r[i]; }
  double nu_minus_lambda(std::size_t i) const { return nu[i] - lambda[i]; }
  double kappa(std::size_t i) const { return std::exp(2.0 * lambda[i]); }
  void resize(std::size_t n);
  void erase_front(std::size_t count);
};

struct HypersurfaceOptions {
  CenterModel center = CenterModel::regular;
  Gauge gauge = Gauge::center;
  double horizon_epsilon = 1e-2;
};

struct HypersurfaceStatus {
  bool horizon = false;
  std::size_t index = 0;  // first point with mu >= 1 - eps when horizon is set
  double max_mu = 0.0;
};

/// Fills m, lambda, nu and zeta from theta on the slice.
///
/// m solves dm/dr = (1 - 2m/r) theta^2 / 2 with m(0) = 0 by the trapezoidal
/// rule (linear in m, so each step is solved exactly). lambda follows from
/// exp(-2 lambda) = 1 - 2m/r; nu + lambda is the quadrature of theta^2/r;
/// zeta comes from d(exp(nu - lambda) zeta)/dr = -exp(nu - lambda) theta / r
/// with zeta(0) = 0. If mu reaches 1 - eps the pass stops at that point and
/// the remaining entries are left as NaN.
HypersurfaceStatus integrate_hypersurface(SliceState& slice, const HypersurfaceOptions& opts);

struct RunConfig {
  int resolution = 256;
  GridPlacement placement = GridPlacement::uniform;
  double r_max = 1.0;
  double r_min = 1e-3;  // innermost radius for geometric placement
  CenterModel center = CenterModel::regular;
  Gauge gauge = Gauge::center;
  double u_start = 0.0;
  double u_max = 1.0;
  double cfl = 0.5;  // nominal du = cfl * r_max / resolution
  double step_tolerance = 5e-2;
  double min_step_fraction = 1.0 / 1048576.0;  // step-control floor; near-critical runs need it small
  double retire_fraction = 1.0 / 1024.0;       // points landing sooner than this fraction of a step are retired
  double horizon_epsilon = 1e-2;
  double regrid_fraction = 0.5;  // refine when fewer than this fraction of points remain; 0 = off
  int min_points = 8;
  // Steps are shortened so the innermost characteristic lands on r = 0, where it is dropped.
  // Without landing, the innermost point is retired once r < factor * |dr/du| * du.
  bool center_landing = true;
  double retire_factor = 2.0;
  bool stop_on_dispersal = true;
  double dispersal_ratio = 1e-3;
  int dispersal_window = 10;
  double dispersal_floor = 1e-14;  // below this peak mu the data counts as flat
  int output_every = 1;

  void validate() const;
  HypersurfaceOptions hypersurface() const { return {center, gauge, horizon_epsilon}; }
  double nominal_step() const { return cfl * r_max / resolution; }
};

struct HorizonReport {
  Outcome outcome = Outcome::max_time_reached;
  double u = 0.0;
  double r = 0.0;
  double m = 0.0;
  double mu = 0.0;
  double peak_mu = 0.0;
  std::size_t steps = 0;
  std::string note;
};

struct RunSample {
  double u;
  double max_mu;
  double m_outer;
  std::size_t points;
};

struct RunResult {
  HorizonReport report;
  std::vector<SliceState> archive;
  std::vector<RunSample> history;
};

// Initial slice: theta sampled from the data on the configured grid.
SliceState initial_slice(const BVFunction& theta_of_r, const RunConfig& config);

struct StepResult {
  SliceState next;
  HypersurfaceStatus status;
  double error_estimate = 0.0;
  std::size_t retired = 0;
};

/// One predictor-corrector step of size du along the incoming characteristics
/// dr/du = -exp(nu - lambda)/2. Along each characteristic
///   d theta/du = exp(nu - lambda) [(exp(2 lambda) - 1) theta + zeta] / (2r),
///   d phi/du   = -exp(nu - lambda) zeta / (2r).
/// Innermost points that reach r = 0 within the step are dropped from the result.
/// Without center landing they are retired before the step instead.
StepResult advance_slice(const SliceState& slice, double du, const RunConfig& config);

RunResult run(const BVFunction& theta_of_r, const RunConfig& config);

struct CharacteristicSample {
  double u;          // solver gauge
  double u_affine;   // affinely shifted so that u_affine = -2r at the seed
  double u_null;     // reparametrized so exp(nu - lambda) = 1 along the curve: u_null = -2r
  double r;
  double m;
  double mu;
  double theta;
  double zeta;
  double lambda;
  double nu;
  double phi;
};

struct CharacteristicTrace {
  std::vector<CharacteristicSample> samples;
  bool truncated = false;
  std::string note;
};

/// Incoming null curve through (u0, r0). When r0 coincides with a grid point
/// of the slice at u0 the solver's own characteristic is followed through
/// the archive; otherwise dr/du = -exp(nu - lambda)/2 is integrated with
/// Heun's method, interpolating fields monotonically in r on each slice.
CharacteristicTrace extract_incoming_curve(const std::vector<SliceState>& archive, double u0,
                                           double r0);

// Interpolated fields of a slice at radius r (r inside the slice).
CharacteristicSample sample_slice(const SliceState& slice, double r);

}  // namespace nullcollapse::bondi
