#pragma once

#include <string>
#include <vector>

#include "nullcollapse/bondi.hpp"
#include "nullcollapse/exterior.hpp"
#include "nullcollapse/initial_data.hpp"

namespace nullcollapse::diagnostics {

/// Thresholds of the small-annulus collapse criterion and the constants derived from them.
struct EstimateConstants {
  double c0 = 0.36787944117144233;  // 1/e
  double c1 = 1.0;
  double horizon_epsilon = 1e-2;

  void validate() const;  // c0 in (0, 1/e], c1 >= 1
  double c2() const;      // 16 c1 exp(1/c1)
  double c3() const;      // (19/2)(e - 2)
  double c4() const;      // 2^(7/2) c2 / e
  double c5() const;      // (1 - exp(-c0)) / (64 c0)
  double c7() const;      // (1/16)(1 - exp(-1/c0)) c0
  double c9() const;      // 2^9 exp(2 c0) c1
  // Mass-content threshold c1 d log(1/d) for an annulus of relative width d.
  double collapse_threshold(double delta) const;
};

enum class Verdict { generic_thm21, generic_thm31, exceptional_candidate, gamma_bounded, undecided };
std::string to_string(Verdict v);
Verdict verdict_from_string(const std::string& s);

enum class LimitKind { finite, plus_infinity, minus_infinity, undecided };
std::string to_string(LimitKind k);

// Tail extremum of I over [T_k/2, T_k] for T_k = T/4, T/2, T.
struct LimitEstimate {
  LimitKind kind = LimitKind::undecided;
  double value = 0.0;
  std::vector<double> windows;
};

struct Theorem31Options {
  double growth_factor = 1.01;  // required per-decade growth of h/g
  int min_decades = 4;
  // Decades just above the smallest tabulated s are skipped: data built from
  // the table stop there, which depresses h over roughly the next decade.
  int floor_margin_decades = 2;
  int samples_per_decade = 8;
  double log_s_floor = -690.0;  // table entries below exp(floor) are dropped
};

struct HgResult {
  bool ok = false;
  std::string reason;
  std::vector<double> s, h, g, ratio;  // s increasing
};

struct Theorem31Outcome {
  Verdict verdict = Verdict::undecided;
  int decades = 0;
  double min_growth = 0.0;  // smallest per-decade growth over the tested decades
  std::string reason;
};

struct ClassifyOptions {
  double convergence_tol = 1e-3;   // relative movement allowed over two window doublings
  double divergence_ratio = 0.75;  // later increment must be at least this fraction of the earlier
  double gamma_slope = 1.0;        // gamma(T) / log T above this counts as unbounded
  double equality_tol = 1e-6;      // |theta0(0) - l| below this (relative) counts as equality
  std::size_t min_samples = 64;
  double min_time = 4.0;
  Theorem31Options theorem31;
};

struct CensorshipVerdict {
  int case_id = 0;  // 1..7, 0 when the limits could not be settled
  LimitEstimate lower, upper;
  Verdict verdict = Verdict::undecided;
  double theta0_initial = 0.0;
  double gamma_end = 0.0;
  double gamma_rate = 0.0;  // gamma(T) / log T
  bool theorem31_applied = false;
  Theorem31Outcome theorem31;
  std::string reason;
};

/// Assigns the case from the tail behaviour of I and applies the genericity
/// tests. A case-1 trace with theta0(0) equal to the limit is passed to the
/// h/g test, which needs the initial data `vartheta` (s-line); without it the
/// verdict is undecided.
CensorshipVerdict classify(const exterior::BoundaryTrace& trace, double theta0_initial,
                           const ClassifyOptions& opts = {}, const BVFunction* vartheta = nullptr);

/// h(s) = sqrt((1/s) int_0^s (exp(s') vartheta(s') - vartheta(0))^2 ds') and
/// g(s) = exp(-gamma(t)/4) at s = exp(-t - 5 gamma(t)).
HgResult h_and_g(const BVFunction& vartheta, const exterior::BoundaryTrace& trace,
                 const Theorem31Options& opts = {});

// g table (s increasing) from a trace, restricted to 0 < s <= 1.
void g_table(const exterior::BoundaryTrace& trace, std::vector<double>& s, std::vector<double>& g,
             double log_s_floor = -690.0);

Theorem31Outcome theorem31_test(const HgResult& hg, const Theorem31Options& opts = {});

struct PsiProfiles {
  std::vector<double> psi, omega, rho, xi;
};

// psi = exp(-gamma)(theta e^s - theta0), omega = (1-beta)(kappa-2) - (kappa0-2),
// xi = (1-beta) e^s zeta - zeta0, rho = exp(-gamma)(omega theta0 + xi).
PsiProfiles psi_fields(const exterior::ExteriorState& state, const exterior::BoundaryTrace& trace);

struct EstimateEntry {
  std::string name;
  double max_violation = 0.0;  // largest excess over the bound (<= 0 when it holds)
  double location = 0.0;
  double tolerance = 0.0;
  std::size_t violations = 0;  // points exceeding the tolerance
  bool passed() const { return violations == 0; }
};

struct EstimateReport {
  std::vector<EstimateEntry> entries;
  bool passed() const;
  std::string to_json() const;
};

/// eta = mu - mu0 exp(-s) against c1 s log(1/s) on 0 < s <= c0. `location`
/// reports s of the worst point; `calibrated_c1` the smallest c1 that holds.
EstimateEntry eta_bound_check(const exterior::ExteriorState& state, const exterior::BoundaryTrace& trace,
                              const EstimateConstants& constants, double* calibrated_c1 = nullptr);

// kappa0 <= 2 kappa0(0) exp(gamma), and mu0(t) <= (exp(gamma(t)-gamma(t-1)) - 1)/(1 - e^{-1}).
std::vector<EstimateEntry> lemma_checks(const exterior::BoundaryTrace& trace, double rel_tol = 1e-12);

struct Decomposition {
  std::vector<double> t, s, psi, omega, rho, tau, psi_tilde, sigma, psi_hat;
  double drift() const;  // max |psi_hat - psi(0)|
};

/// tau = int omega, psi_tilde = exp(-tau) psi, sigma = int exp(-tau) rho and
/// psi_hat = psi_tilde - sigma along one characteristic (trapezoidal in t).
Decomposition decomposition(const exterior::CharacteristicHistory& ch, const exterior::BoundaryTrace& trace);

// Residual of d psi/dt = omega psi + rho along the characteristic (centered differences).
double transport_residual(const Decomposition& d);

/// Centered-difference Jacobian (chi(t; s0 + d) - chi(t; s0 - d)) / (2d)
/// against exp(t - gamma - tau) on the middle characteristic; max relative error.
EstimateEntry jacobian_check(const exterior::CharacteristicHistory& minus,
                             const exterior::CharacteristicHistory& mid,
                             const exterior::CharacteristicHistory& plus,
                             const exterior::BoundaryTrace& trace);

struct CurvatureProfile {
  std::vector<double> r, K;
  double center = 0.0;  // quadratic extrapolation to r = 0
};

// K = (mu + theta zeta exp(-2 lambda)) / r^2 on every grid point.
CurvatureProfile gauss_curvature(const bondi::SliceState& slice);

/// m nondecreasing in r on every slice and nonincreasing along each curve.
/// A step against the expected sign is tolerated up to `factor` times the
/// local second difference (a truncation proxy) plus a rounding floor.
EstimateEntry mass_monotonicity_in_r(const std::vector<bondi::SliceState>& archive, double factor = 10.0);
EstimateEntry mass_monotonicity_along(const bondi::CharacteristicTrace& curve, double factor = 10.0);
EstimateEntry kappa_at_least_one(const std::vector<bondi::SliceState>& archive);

std::string to_json(const CensorshipVerdict& v);

}  // namespace nullcollapse::diagnostics
