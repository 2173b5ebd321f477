#include "nullcollapse/initial_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>

#include "nullcollapse/errors.hpp"
#include "nullcollapse/numerics.hpp"

namespace nullcollapse {

std::string to_string(Domain d) { return d == Domain::s_line ? "s" : "r"; }

Domain domain_from_string(const std::string& tag) {
  if (tag == "s" || tag == "s-line") return Domain::s_line;
  if (tag == "r" || tag == "r-half-line") return Domain::r_half_line;
  throw MalformedData("unknown domain tag '" + tag + "'");
}

BVFunction::BVFunction(Domain domain, std::vector<Breakpoint> breakpoints)
    : domain_(domain), breakpoints_(std::move(breakpoints)) {
  validate();
}

void BVFunction::validate() const {
  if (breakpoints_.empty()) throw MalformedData("BVFunction: no breakpoints");
  for (std::size_t k = 0; k < breakpoints_.size(); ++k) {
    const auto& b = breakpoints_[k];
    if (!std::isfinite(b.x) || !std::isfinite(b.left) || !std::isfinite(b.right) ||
        !std::isfinite(b.slope)) {
      throw MalformedData("BVFunction: non-finite entry at breakpoint " + std::to_string(k));
    }
    if (domain_ == Domain::r_half_line && b.x < 0.0) {
      throw MalformedData("BVFunction: negative radius breakpoint");
    }
    if (k > 0) {
      const auto& a = breakpoints_[k - 1];
      if (!(b.x > a.x)) throw MalformedData("BVFunction: breakpoints must be strictly increasing");
      const double end = a.right + a.slope * (b.x - a.x);
      const double scale = std::max({1.0, std::abs(end), std::abs(b.left)});
      if (std::abs(end - b.left) > 1e-9 * scale) {
        std::ostringstream msg;
        msg << "BVFunction: left limit at x=" << b.x << " is " << b.left
            << " but the preceding segment ends at " << end;
        throw MalformedData(msg.str());
      }
    }
  }
  if (breakpoints_.back().slope != 0.0) {
    throw MalformedData("BVFunction: last segment must be flat (finite total variation)");
  }
}

BVFunction BVFunction::from_samples(Domain domain, const std::vector<double>& x,
                                    const std::vector<double>& y) {
  if (x.size() != y.size() || x.empty()) throw MalformedData("from_samples: size mismatch");
  std::vector<Node> nodes;
  nodes.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) nodes.push_back({x[i], y[i], y[i]});
  return from_nodes(domain, nodes);
}

BVFunction BVFunction::from_nodes(Domain domain, const std::vector<Node>& nodes) {
  if (nodes.empty()) throw MalformedData("from_nodes: empty");
  std::vector<Breakpoint> bps;
  bps.reserve(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    double slope = 0.0;
    if (i + 1 < nodes.size()) {
      const double dx = nodes[i + 1].x - nodes[i].x;
      if (!(dx > 0.0)) throw MalformedData("from_nodes: abscissae must be strictly increasing");
      slope = (nodes[i + 1].left - nodes[i].right) / dx;
    }
    bps.push_back({nodes[i].x, nodes[i].left, nodes[i].right, slope});
  }
  // Make the stored left limits bit-consistent with the segment arithmetic.
  for (std::size_t i = 1; i < bps.size(); ++i) {
    bps[i].left = bps[i - 1].right + bps[i - 1].slope * (bps[i].x - bps[i - 1].x);
  }
  return BVFunction(domain, std::move(bps));
}

BVFunction BVFunction::constant(Domain domain, double value) {
  return BVFunction(domain, {{0.0, value, value, 0.0}});
}

BVFunction BVFunction::step(Domain domain, double at, double value_left, double value_right) {
  return BVFunction(domain, {{at, value_left, value_right, 0.0}});
}

double BVFunction::operator()(double x) const {
  if (x < breakpoints_.front().x) return breakpoints_.front().left;
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x,
                             [](double v, const Breakpoint& b) { return v < b.x; });
  const Breakpoint& b = *(it - 1);
  return b.right + b.slope * (x - b.x);
}

double BVFunction::left_limit(double x) const {
  auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), x,
                             [](const Breakpoint& b, double v) { return b.x < v; });
  if (it != breakpoints_.end() && it->x == x) return it->left;
  return (*this)(x);
}

double BVFunction::integrate(double a, double b) const {
  if (b < a) return -integrate(b, a);
  double total = 0.0;
  // Left tail.
  const double x0 = breakpoints_.front().x;
  if (a < x0) total += breakpoints_.front().left * (std::min(b, x0) - a);
  for (std::size_t k = 0; k < breakpoints_.size(); ++k) {
    const auto& bp = breakpoints_[k];
    const double hi_end =
        k + 1 < breakpoints_.size() ? breakpoints_[k + 1].x : std::numeric_limits<double>::infinity();
    const double lo = std::max(a, bp.x);
    const double hi = std::min(b, hi_end);
    if (hi <= lo) continue;
    const double v_lo = bp.right + bp.slope * (lo - bp.x);
    const double v_hi = bp.right + bp.slope * (hi - bp.x);
    total += 0.5 * (v_lo + v_hi) * (hi - lo);
  }
  return total;
}

double total_variation(const BVFunction& f) {
  double tv = 0.0;
  const auto& bps = f.breakpoints();
  for (std::size_t k = 0; k < bps.size(); ++k) {
    tv += std::abs(bps[k].right - bps[k].left);
    if (k + 1 < bps.size()) tv += std::abs(bps[k].slope) * (bps[k + 1].x - bps[k].x);
  }
  return tv;
}

namespace {

double slope_at(const BVFunction& f, double x) {
  const auto& bps = f.breakpoints();
  if (x < bps.front().x) return 0.0;
  auto it = std::upper_bound(bps.begin(), bps.end(), x,
                             [](double v, const BVFunction::Breakpoint& b) { return v < b.x; });
  return (it - 1)->slope;
}

}  // namespace

BVFunction linear_combination(double a, const BVFunction& f, double b, const BVFunction& g) {
  if (f.domain() != g.domain()) throw DomainMismatch("linear_combination: domains differ");
  std::vector<double> xs;
  xs.reserve(f.breakpoints().size() + g.breakpoints().size());
  for (const auto& bp : f.breakpoints()) xs.push_back(bp.x);
  for (const auto& bp : g.breakpoints()) xs.push_back(bp.x);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::vector<BVFunction::Breakpoint> out;
  out.reserve(xs.size());
  for (double x : xs) {
    out.push_back({x, a * f.left_limit(x) + b * g.left_limit(x), a * f(x) + b * g(x),
                   a * slope_at(f, x) + b * slope_at(g, x)});
  }
  out.back().slope = 0.0;
  return BVFunction(f.domain(), std::move(out));
}

namespace {

// Sampling nodes: every breakpoint plus `subdivisions` interior points per
// segment and a geometric run out to `far` beyond the last breakpoint.
std::vector<double> sampling_nodes(const BVFunction& f, int subdivisions, bool include_zero,
                                   double far_factor) {
  std::vector<double> xs;
  if (include_zero) xs.push_back(0.0);
  const auto& bps = f.breakpoints();
  for (std::size_t k = 0; k < bps.size(); ++k) {
    xs.push_back(bps[k].x);
    if (k + 1 < bps.size()) {
      for (int j = 1; j < subdivisions; ++j) {
        xs.push_back(bps[k].x + (bps[k + 1].x - bps[k].x) * double(j) / subdivisions);
      }
    }
  }
  const double last = std::max(bps.back().x, 1e-300);
  if (far_factor > 1.0 && last > 0.0) {
    const int per_decade = std::max(4, subdivisions);
    const int count = static_cast<int>(std::ceil(std::log10(far_factor) * per_decade));
    for (int j = 1; j <= count; ++j) xs.push_back(last * std::pow(10.0, double(j) / per_decade));
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  return xs;
}

}  // namespace

ScalarFieldProfiles phi_from_alpha(const BVFunction& alpha, int subdivisions) {
  if (alpha.domain() != Domain::r_half_line) {
    throw DomainMismatch("phi_from_alpha: alpha must be given on the r half-line");
  }
  std::vector<double> xs = sampling_nodes(alpha, subdivisions, true, 1e4);
  xs.erase(std::remove_if(xs.begin(), xs.end(), [](double x) { return x < 0.0; }), xs.end());
  std::vector<double> phi(xs.size());
  double cumulative = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i > 0) cumulative += alpha.integrate(xs[i - 1], xs[i]);
    phi[i] = xs[i] == 0.0 ? alpha(0.0) : cumulative / xs[i];
    if (!std::isfinite(phi[i])) throw MalformedData("phi_from_alpha: integral diverges near r = 0");
  }
  ScalarFieldProfiles out;
  out.phi = BVFunction::from_samples(Domain::r_half_line, xs, phi);
  out.theta = linear_combination(1.0, alpha, -1.0, out.phi);
  return out;
}

BVFunction alpha_from_theta(const BVFunction& theta, double phi_at_infinity, int subdivisions) {
  if (theta.domain() != Domain::r_half_line) {
    throw DomainMismatch("alpha_from_theta: theta must be given on the r half-line");
  }
  const auto& bps = theta.breakpoints();
  if (bps.back().right != 0.0) {
    throw MalformedData("alpha_from_theta: theta must vanish at large r for int theta/r to converge");
  }
  std::vector<double> xs = sampling_nodes(theta, subdivisions, true, 1.0);
  // Integral of (c + m r)/r over [r1, r2].
  auto piece = [&](double r1, double r2) {
    const double mid = 0.5 * (r1 + r2);
    const double v = theta(mid);
    const double m = slope_at(theta, mid);
    const double c = v - m * mid;
    if (r1 == 0.0) {
      if (c != 0.0) throw MalformedData("alpha_from_theta: int theta dr/r diverges near r = 0");
      return m * r2;
    }
    return c * std::log(r2 / r1) + m * (r2 - r1);
  };
  std::vector<double> phi(xs.size(), phi_at_infinity);
  for (std::size_t i = xs.size() - 1; i-- > 0;) phi[i] = phi[i + 1] - piece(xs[i], xs[i + 1]);
  const BVFunction phi_f = BVFunction::from_samples(Domain::r_half_line, xs, phi);
  return linear_combination(1.0, theta, 1.0, phi_f);
}

BVFunction default_f1(double s_end, double spacing) {
  const int n = std::max(2, static_cast<int>(std::ceil(s_end / spacing)));
  std::vector<BVFunction::Node> nodes;
  nodes.reserve(n + 1);
  nodes.push_back({0.0, 0.0, 1.0});
  for (int i = 1; i < n; ++i) {
    const double s = s_end * double(i) / n;
    nodes.push_back({s, std::exp(-s), std::exp(-s)});
  }
  nodes.push_back({s_end, std::exp(-s_end), 0.0});
  return BVFunction::from_nodes(Domain::s_line, nodes);
}

BVFunction build_f2(const std::vector<double>& s, const std::vector<double>& g) {
  if (s.size() != g.size() || s.size() < 3) throw ConstructionError("build_f2: need >= 3 samples");
  std::vector<double> ls(s.size()), lg(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!(s[i] > 0.0) || s[i] > 1.0) throw ConstructionError("build_f2: s must lie in (0, 1]");
    if (!(g[i] > 0.0)) throw ConstructionError("build_f2: g must be positive");
    ls[i] = std::log(s[i]);
    lg[i] = std::log(g[i]);
  }
  const numerics::Pchip loglog(ls, lg);
  std::vector<BVFunction::Node> nodes;
  nodes.reserve(s.size() + 1);
  nodes.push_back({0.0, 0.0, 0.0});
  for (std::size_t i = 0; i < s.size(); ++i) {
    // d(s g)/ds = g (1 + dlog g / dlog s)
    const double factor = 1.0 + loglog.derivative(ls[i]);
    if (!(factor > 1e-12)) {
      std::ostringstream msg;
      msg << std::setprecision(17) << "build_f2: radicand d(s g)/ds is not positive at s = " << s[i];
      throw ConstructionError(msg.str());
    }
    const double value = std::exp(-s[i]) * std::sqrt(g[i] * factor);
    const bool last = i + 1 == s.size();
    nodes.push_back({s[i], value, last ? 0.0 : value});
  }
  return BVFunction::from_nodes(Domain::s_line, nodes);
}

BVFunction perturb(const BVFunction& base, const PerturbationBasis& basis, const FamilyPoint& p) {
  if (base.domain() != Domain::s_line || basis.f1.domain() != Domain::s_line ||
      basis.f2.domain() != Domain::s_line) {
    throw DomainMismatch("perturb: base and basis must live on the s-line");
  }
  const BVFunction partial = linear_combination(1.0, base, p.lambda1, basis.f1);
  return linear_combination(1.0, partial, p.lambda2, basis.f2);
}

BVFunction s_profile_to_radius(const BVFunction& vartheta, double a, int per_segment) {
  if (vartheta.domain() != Domain::s_line) throw DomainMismatch("s_profile_to_radius: need s-line");
  if (!(a > 0.0)) throw MalformedData("s_profile_to_radius: a must be positive");
  const auto& bps = vartheta.breakpoints();
  std::vector<BVFunction::Node> nodes;
  nodes.push_back({0.0, bps.front().left, bps.front().left});
  for (std::size_t k = 0; k < bps.size(); ++k) {
    nodes.push_back({a * std::exp(bps[k].x), bps[k].left, bps[k].right});
    if (k + 1 < bps.size()) {
      for (int j = 1; j < per_segment; ++j) {
        const double sx = bps[k].x + (bps[k + 1].x - bps[k].x) * double(j) / per_segment;
        const double v = vartheta(sx);
        nodes.push_back({a * std::exp(sx), v, v});
      }
    }
  }
  if (nodes.size() > 1 && nodes[1].x <= 0.0) nodes.erase(nodes.begin());
  return BVFunction::from_nodes(Domain::r_half_line, nodes);
}

void write_bv_file(std::ostream& os, const BVFunction& f, const std::string& units) {
  os << "# nullcollapse-bv 1\n";
  os << "# units: " << (units.empty() ? "dimensionless" : units) << '\n';
  os << "# columns: x value_left value_right slope\n";
  os << "domain " << to_string(f.domain()) << '\n';
  os << std::setprecision(17);
  for (const auto& b : f.breakpoints()) {
    os << b.x << ' ' << b.left << ' ' << b.right << ' ' << b.slope << '\n';
  }
}

void write_bv_file(const std::string& path, const BVFunction& f, const std::string& units) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  write_bv_file(os, f, units);
}

BVFunction read_bv_file(std::istream& is) {
  std::string line;
  std::optional<Domain> domain;
  std::vector<BVFunction::Breakpoint> bps;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    if (line.rfind("domain", 0) == 0) {
      std::string key, tag;
      ls >> key >> tag;
      domain = domain_from_string(tag);
      continue;
    }
    BVFunction::Breakpoint b{};
    if (!(ls >> b.x >> b.left >> b.right >> b.slope)) {
      throw MalformedData("initial-data line " + std::to_string(lineno) +
                          ": expected 'x value_left value_right slope'");
    }
    bps.push_back(b);
  }
  if (!domain) throw MalformedData("initial-data file has no 'domain' line");
  return BVFunction(*domain, std::move(bps));
}

BVFunction read_bv_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open initial-data file '" + path + "'");
  return read_bv_file(is);
}

BVFunction gaussian_pulse(Domain domain, double amplitude, double center, double width, double extent,
                          int samples) {
  if (!(width > 0.0) || !(extent > 0.0) || samples < 3) throw MalformedData("gaussian_pulse: bad shape");
  const double lo = domain == Domain::r_half_line ? 0.0 : -extent;
  std::vector<double> x(samples), y(samples);
  for (int i = 0; i < samples; ++i) {
    x[i] = lo + (extent - lo) * i / (samples - 1);
    const double z = (x[i] - center) / width;
    y[i] = amplitude * std::exp(-z * z);
  }
  y.back() = 0.0;
  return BVFunction::from_samples(domain, x, y);
}

BVFunction annular_bump(Domain domain, double amplitude, double inner, double outer, int samples) {
  if (!(outer > inner) || samples < 3) throw MalformedData("annular_bump: need inner < outer");
  if (domain == Domain::r_half_line && inner < 0.0) throw MalformedData("annular_bump: inner radius < 0");
  std::vector<double> x(samples), y(samples);
  for (int i = 0; i < samples; ++i) {
    const double f = double(i) / (samples - 1);
    x[i] = inner + (outer - inner) * f;
    const double sn = std::sin(std::numbers::pi * f);
    y[i] = amplitude * sn * sn;
  }
  y.front() = y.back() = 0.0;
  std::vector<double> xs, ys;
  if (domain == Domain::r_half_line && inner > 0.0) {
    xs.push_back(0.0);
    ys.push_back(0.0);
  }
  xs.insert(xs.end(), x.begin(), x.end());
  ys.insert(ys.end(), y.begin(), y.end());
  return BVFunction::from_samples(domain, xs, ys);
}

}  // namespace nullcollapse
