#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nullcollapse {

// Which line a BVFunction lives on: dimensionless s (whole real line) or
// the area radius r (half-line r >= 0).
enum class Domain { s_line, r_half_line };

std::string to_string(Domain d);
Domain domain_from_string(const std::string& tag);

/// Piecewise-linear function with an explicit jump at every breakpoint.
///
/// Breakpoint k carries the left limit, the (right-continuous) value at the
/// breakpoint itself and the slope of the segment [x_k, x_{k+1}). Left of the
/// first breakpoint the function is the constant left limit of x_0; the last
/// segment must be flat so the total variation is finite.
class BVFunction {
 public:
  struct Breakpoint {
    double x;
    double left;
    double right;
    double slope;
  };

  BVFunction() = default;
  BVFunction(Domain domain, std::vector<Breakpoint> breakpoints);

  // Continuous piecewise-linear interpolant through (x, y); constant tails.
  static BVFunction from_samples(Domain domain, const std::vector<double>& x,
                                 const std::vector<double>& y);
  static BVFunction constant(Domain domain, double value);
  // value_left for x < at, value_right for x >= at.
  static BVFunction step(Domain domain, double at, double value_left, double value_right);

  struct Node {
    double x;
    double left;
    double right;
  };
  // Slopes are inferred from consecutive nodes; the last node starts the flat tail.
  static BVFunction from_nodes(Domain domain, const std::vector<Node>& nodes);

  double operator()(double x) const;
  double left_limit(double x) const;
  double right_limit(double x) const { return (*this)(x); }

  Domain domain() const { return domain_; }
  const std::vector<Breakpoint>& breakpoints() const { return breakpoints_; }
  bool empty() const { return breakpoints_.empty(); }

  // Exact integral of the function over [a, b] restricted to where it is
  // piecewise linear (tails included).
  double integrate(double a, double b) const;

 private:
  void validate() const;

  Domain domain_ = Domain::s_line;
  std::vector<Breakpoint> breakpoints_;
};

// Exact: sum of |slope| * length plus jump magnitudes.
double total_variation(const BVFunction& f);

// Pointwise a*f + b*g with the union of breakpoints.
BVFunction linear_combination(double a, const BVFunction& f, double b, const BVFunction& g);

struct ScalarFieldProfiles {
  BVFunction phi;
  BVFunction theta;
};

/// phi(r) = (1/r) int_0^r alpha and theta = alpha - phi.
///
/// phi is not piecewise linear; it is sampled exactly at the breakpoints of
/// alpha plus `subdivisions` interior points per segment and interpolated.
ScalarFieldProfiles phi_from_alpha(const BVFunction& alpha, int subdivisions = 16);

// Inverse route: phi(r) = phi_inf - int_r^inf theta dr'/r', alpha = theta + phi.
BVFunction alpha_from_theta(const BVFunction& theta, double phi_at_infinity = 0.0,
                            int subdivisions = 16);

struct GProvenance {
  std::string source;  // e.g. "trace:<path>" or "analytic"
  std::size_t samples = 0;
  double s_min = 0.0;
  double s_max = 0.0;
};

struct PerturbationBasis {
  BVFunction f1;
  BVFunction f2;
  GProvenance g_provenance;
};

struct FamilyPoint {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
};

// f1(s) = exp(-s) on [0, s_end], zero elsewhere.
BVFunction default_f1(double s_end = 30.0, double spacing = 0.02);

/// f2(s) = exp(-s) sqrt(d(s g)/ds) on (0,1), zero elsewhere.
///
/// g is given as a table (s_k, g_k), s increasing inside (0, 1]. It is
/// interpolated monotonically in log-log space and d(s g)/ds is taken
/// analytically from the interpolant. f2 is sampled at the table nodes.
/// Throws ConstructionError naming the first s where the radicand is not
/// positive.
BVFunction build_f2(const std::vector<double>& s, const std::vector<double>& g);

// Sampled profiles, zero outside their support. `samples` nodes are placed
// uniformly on the support.
BVFunction gaussian_pulse(Domain domain, double amplitude, double center, double width, double extent,
                          int samples = 4096);
// amplitude sin^2(pi (x - inner)/(outer - inner)) on [inner, outer].
BVFunction annular_bump(Domain domain, double amplitude, double inner, double outer, int samples = 1024);

// base + lambda1 f1 + lambda2 f2; all three must live on the s-line.
BVFunction perturb(const BVFunction& base, const PerturbationBasis& basis, const FamilyPoint& p);

// theta(0, r) = vartheta(log(r / a)) for the Bondi initial cone.
BVFunction s_profile_to_radius(const BVFunction& vartheta, double a, int per_segment = 8);

// Line-oriented text file: header lines starting with '#', a `domain` line,
// and one `x value_left value_right slope` breakpoint per line.
void write_bv_file(std::ostream& os, const BVFunction& f, const std::string& units = "");
void write_bv_file(const std::string& path, const BVFunction& f, const std::string& units = "");
BVFunction read_bv_file(std::istream& is);
BVFunction read_bv_file(const std::string& path);

}  // namespace nullcollapse
