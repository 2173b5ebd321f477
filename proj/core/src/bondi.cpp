#include "nullcollapse/bondi.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "nullcollapse/errors.hpp"
#include "nullcollapse/numerics.hpp"

namespace nullcollapse::bondi {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::dispersal: return "dispersal";
    case Outcome::horizon: return "horizon";
    case Outcome::max_time_reached: return "max-time-reached";
  }
  return "unknown";
}

std::string to_string(CenterModel m) {
  switch (m) {
    case CenterModel::regular: return "regular";
    case CenterModel::scale_invariant: return "scale-invariant";
    case CenterModel::adaptive: return "adaptive";
  }
  return "unknown";
}

std::string to_string(Gauge g) { return g == Gauge::center ? "center" : "outer"; }
std::string to_string(GridPlacement p) {
  return p == GridPlacement::uniform ? "uniform" : "geometric";
}

CenterModel center_model_from_string(const std::string& s) {
  if (s == "regular") return CenterModel::regular;
  if (s == "scale-invariant") return CenterModel::scale_invariant;
  if (s == "adaptive") return CenterModel::adaptive;
  throw MalformedData("unknown center model '" + s + "'");
}

Gauge gauge_from_string(const std::string& s) {
  if (s == "center") return Gauge::center;
  if (s == "outer") return Gauge::outer;
  throw MalformedData("unknown gauge '" + s + "'");
}

GridPlacement placement_from_string(const std::string& s) {
  if (s == "uniform") return GridPlacement::uniform;
  if (s == "geometric") return GridPlacement::geometric;
  throw MalformedData("unknown grid placement '" + s + "'");
}

Outcome outcome_from_string(const std::string& s) {
  if (s == "dispersal") return Outcome::dispersal;
  if (s == "horizon") return Outcome::horizon;
  if (s == "max-time-reached") return Outcome::max_time_reached;
  throw MalformedData("unknown outcome '" + s + "'");
}

void SliceState::resize(std::size_t n) {
  for (auto* v : {&label, &r, &phi, &theta, &zeta, &m, &lambda, &nu}) v->resize(n, kNaN);
}

void SliceState::erase_front(std::size_t count) {
  for (auto* v : {&label, &r, &phi, &theta, &zeta, &m, &lambda, &nu}) {
    v->erase(v->begin(), v->begin() + static_cast<std::ptrdiff_t>(count));
  }
}

namespace {

double center_exponent(const SliceState& s, CenterModel model) {
  switch (model) {
    case CenterModel::regular: return 1.0;
    case CenterModel::scale_invariant: return 0.0;
    case CenterModel::adaptive: {
      if (s.size() < 2) return 1.0;
      const double t0 = s.theta[0], t1 = s.theta[1];
      if (t0 == 0.0 || t1 == 0.0 || (t0 > 0) != (t1 > 0)) return 1.0;
      const double p = std::log(t1 / t0) / std::log(s.r[1] / s.r[0]);
      return std::clamp(p, 0.0, 2.0);
    }
  }
  return 1.0;
}

// z -> expm1(z) / z, continuous through 0.
double phi1(double z) {
  if (std::abs(z) < 1e-5) return 1.0 + z / 2.0 + z * z / 6.0;
  return std::expm1(z) / z;
}

// int_0^1 t^k (1 + e t)^p dt for k = 0, 1, 2.
std::array<double, 3> moments(double e, double p) {
  std::array<double, 3> m{0.0, 0.0, 0.0};
  if (e <= 0.5) {
    double c = 1.0, en = 1.0;  // binomial coefficient and e^n
    for (int n = 0; n < 400; ++n) {
      double largest = 0.0;
      for (int k = 0; k < 3; ++k) {
        const double term = c * en / (n + k + 1);
        m[k] += term;
        largest = std::max(largest, std::abs(term));
      }
      if (n > std::abs(p) && largest < 1e-17 * std::abs(m[0])) break;
      c *= (p - n) / (n + 1);
      en *= e;
    }
    return m;
  }
  // u = 1 + e t: U(s) = int_1^{1+e} u^(s-1) du
  const double l = std::log1p(e);
  auto U = [&](double s) { return l * phi1(s * l); };
  const double u1 = U(p + 1), u2 = U(p + 2), u3 = U(p + 3);
  m[0] = u1 / e;
  m[1] = (u2 - u1) / (e * e);
  m[2] = (u3 - 2.0 * u2 + u1) / (e * e * e);
  return m;
}

// Integrals over [a, b] with theta linear in r. The weights are exact for the
// 1/r factor (and a power-law exp(D)), so both regular data (theta ~ r) and
// scale-invariant data (theta constant) are integrated without error
// building up at r = 0.
//   int theta^2 / r dr
double theta2_over_r(double ta, double tb, double a, double b) {
  const double e = (b - a) / a, dt = tb - ta;
  const auto m = moments(e, -1.0);
  return e * (ta * ta * m[0] + 2.0 * ta * dt * m[1] + dt * dt * m[2]);
}

//   int exp(D) theta / r dr with D linear in log r
double exp_theta_over_r(double ta, double tb, double Da, double Db, double a, double b) {
  const double e = (b - a) / a, dt = tb - ta;
  const double q = (Db - Da) / std::log1p(e);
  const auto m = moments(e, q - 1.0);
  return std::exp(Da) * e * (ta * m[0] + dt * m[1]);
}

}  // namespace

HypersurfaceStatus integrate_hypersurface(SliceState& s, const HypersurfaceOptions& opts) {
  const std::size_t n = s.size();
  if (n == 0) throw MalformedData("integrate_hypersurface: empty slice");
  s.zeta.assign(n, kNaN);
  s.m.assign(n, kNaN);
  s.lambda.assign(n, kNaN);
  s.nu.assign(n, kNaN);
  std::vector<double> P(n), D(n), W(n);
  HypersurfaceStatus status;
  const double mu_cap = 1.0 - opts.horizon_epsilon;

  // Innermost interval: theta ~ theta_0 (r / r_0)^p.
  const double p = center_exponent(s, opts.center);
  const double r0 = s.r[0];
  const double th0 = s.theta[0];
  const double a = th0 * th0;
  s.m[0] = a * r0 / (2.0 * (2.0 * p + 1.0)) / (1.0 + a / (4.0 * p + 1.0));
  double mu_prev = 2.0 * s.m[0] / r0;
  status.max_mu = mu_prev;
  if (mu_prev >= mu_cap) {
    status.horizon = true;
    status.index = 0;
    return status;
  }
  s.lambda[0] = -0.5 * std::log1p(-mu_prev);
  const bool power_law = p > 1e-3;
  P[0] = power_law ? a / (2.0 * p) : 0.0;
  D[0] = P[0] - 2.0 * s.lambda[0];
  if (power_law) {
    W[0] = -th0 * std::exp(0.5 * D[0]) / p;
  } else {
    // exp(nu - lambda) ~ x^(theta_0^2) below r_0
    W[0] = a > 0.0 ? -std::exp(D[0]) / th0 : 0.0;
  }

  for (std::size_t i = 1; i < n; ++i) {
    const double h = s.r[i] - s.r[i - 1];
    const double tp2 = s.theta[i - 1] * s.theta[i - 1];
    const double ti2 = s.theta[i] * s.theta[i];
    s.m[i] = (s.m[i - 1] + 0.25 * h * ((1.0 - mu_prev) * tp2 + ti2)) /
             (1.0 + 0.5 * h * ti2 / s.r[i]);
    const double mu = 2.0 * s.m[i] / s.r[i];
    status.max_mu = std::max(status.max_mu, mu);
    if (!(mu < mu_cap)) {
      status.horizon = true;
      status.index = i;
      return status;
    }
    s.lambda[i] = -0.5 * std::log1p(-mu);
    P[i] = P[i - 1] + theta2_over_r(s.theta[i - 1], s.theta[i], s.r[i - 1], s.r[i]);
    D[i] = P[i] - 2.0 * s.lambda[i];
    W[i] = W[i - 1] - exp_theta_over_r(s.theta[i - 1], s.theta[i], D[i - 1], D[i], s.r[i - 1], s.r[i]);
    mu_prev = mu;
  }

  const double shift = opts.gauge == Gauge::outer ? -D[n - 1] : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s.zeta[i] = W[i] * std::exp(-D[i]);
    s.nu[i] = P[i] + shift - s.lambda[i];
  }
  return status;
}

void RunConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("run", what); };
  if (resolution < 16) fail("resolution must be >= 16");
  if (!(horizon_epsilon > 0.0 && horizon_epsilon < 1.0)) fail("horizon_epsilon must lie in (0, 1)");
  if (!(r_max > 0.0)) fail("r_max must be positive");
  if (placement == GridPlacement::geometric && !(r_min > 0.0 && r_min < r_max)) {
    fail("geometric placement needs 0 < r_min < r_max");
  }
  if (!(u_max > u_start)) fail("u_max must exceed u_start");
  if (!(cfl > 0.0)) fail("cfl must be positive");
  if (!(step_tolerance > 0.0)) fail("step_tolerance must be positive");
  if (!(min_step_fraction > 0.0 && min_step_fraction < 1.0)) fail("min_step_fraction in (0,1)");
  if (!(retire_fraction > 0.0 && retire_fraction < 1.0)) fail("retire_fraction in (0,1)");
  if (regrid_fraction < 0.0 || regrid_fraction >= 1.0) fail("regrid_fraction must lie in [0, 1)");
  if (min_points < 4) fail("min_points must be >= 4");
  if (output_every < 1) fail("output_every must be >= 1");
  if (dispersal_window < 1) fail("dispersal_window must be >= 1");
}

SliceState initial_slice(const BVFunction& theta_of_r, const RunConfig& config) {
  if (theta_of_r.domain() != Domain::r_half_line) {
    throw DomainMismatch("initial_slice: theta must be given on the r half-line");
  }
  const std::size_t n = static_cast<std::size_t>(config.resolution);
  SliceState s;
  s.u = config.u_start;
  s.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.label[i] = static_cast<double>(i);
    if (config.placement == GridPlacement::uniform) {
      s.r[i] = config.r_max * static_cast<double>(i + 1) / static_cast<double>(n);
    } else {
      s.r[i] = config.r_min * std::pow(config.r_max / config.r_min,
                                       static_cast<double>(i) / static_cast<double>(n - 1));
    }
    s.theta[i] = theta_of_r(s.r[i]);
  }
  // phi from theta = r dphi/dr with phi = 0 at the outer edge.
  s.phi[n - 1] = 0.0;
  for (std::size_t i = n - 1; i-- > 0;) {
    s.phi[i] = s.phi[i + 1] -
               0.5 * (s.r[i + 1] - s.r[i]) * (s.theta[i] / s.r[i] + s.theta[i + 1] / s.r[i + 1]);
  }
  return s;
}

namespace {

struct Rates {
  std::vector<double> dr, dtheta, dphi;
};

Rates rates(const SliceState& s) {
  const std::size_t n = s.size();
  Rates out{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const double w = std::exp(s.nu[i] - s.lambda[i]);
    const double k = std::expm1(2.0 * s.lambda[i]);
    out.dr[i] = -0.5 * w;
    out.dtheta[i] = w * (k * s.theta[i] + s.zeta[i]) / (2.0 * s.r[i]);
    out.dphi[i] = -w * s.zeta[i] / (2.0 * s.r[i]);
  }
  return out;
}

bool strictly_increasing_positive(const std::vector<double>& r) {
  if (r.empty() || !(r[0] > 0.0)) return false;
  for (std::size_t i = 1; i < r.size(); ++i) {
    if (!(r[i] > r[i - 1])) return false;
  }
  return true;
}

double landing_time(const SliceState& s, std::size_t i) {
  return 2.0 * s.r[i] / std::exp(s.nu[i] - s.lambda[i]);
}

}  // namespace

StepResult advance_slice(const SliceState& slice, double du, const RunConfig& config) {
  const HypersurfaceOptions hopts = config.hypersurface();
  StepResult result;
  SliceState base = slice;
  const std::size_t min_pts = static_cast<std::size_t>(config.min_points);
  const double tiny = config.nominal_step() * config.retire_fraction;
  // Retire points too close to the center to take a meaningful step.
  while (base.size() > min_pts &&
         (config.center_landing ? landing_time(base, 0) < tiny
                                : base.r[0] < config.retire_factor * 0.5 *
                                                  std::exp(base.nu[0] - base.lambda[0]) * du)) {
    base.erase_front(1);
    ++result.retired;
  }
  if (result.retired > 0) {
    const auto st = integrate_hypersurface(base, hopts);
    if (st.horizon) {
      result.next = base;
      result.status = st;
      return result;
    }
  }

  const Rates k1 = rates(base);
  // Points landing on the center during this step do not survive it.
  std::size_t drop = 0;
  if (config.center_landing) {
    while (drop + 2 < base.size() && landing_time(base, drop) <= du * (1.0 + 1e-9)) ++drop;
  }
  result.retired += drop;
  const std::size_t n = base.size() - drop;
  SliceState pred = base;
  pred.erase_front(drop);
  pred.u = base.u + du;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + drop;
    pred.r[i] = base.r[j] + du * k1.dr[j];
    pred.theta[i] = base.theta[j] + du * k1.dtheta[j];
    pred.phi[i] = base.phi[j] + du * k1.dphi[j];
  }
  if (!strictly_increasing_positive(pred.r)) {
    result.next = base;
    result.error_estimate = std::numeric_limits<double>::infinity();
    return result;
  }
  result.status = integrate_hypersurface(pred, hopts);
  if (result.status.horizon) {
    result.next = std::move(pred);
    return result;
  }

  const Rates k2 = rates(pred);
  SliceState next = pred;
  double theta_scale = 1.0;
  double err = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + drop;
    next.r[i] = base.r[j] + 0.5 * du * (k1.dr[j] + k2.dr[i]);
    next.theta[i] = base.theta[j] + 0.5 * du * (k1.dtheta[j] + k2.dtheta[i]);
    next.phi[i] = base.phi[j] + 0.5 * du * (k1.dphi[j] + k2.dphi[i]);
    theta_scale = std::max(theta_scale, std::abs(next.theta[i]));
    err = std::max(err, std::abs(next.theta[i] - pred.theta[i]));
  }
  result.error_estimate = err / theta_scale;
  if (!strictly_increasing_positive(next.r)) {
    result.next = base;
    result.error_estimate = std::numeric_limits<double>::infinity();
    return result;
  }
  result.status = integrate_hypersurface(next, hopts);
  result.next = std::move(next);
  return result;
}

namespace {

// Insert a midpoint in every interval; theta and phi by monotone cubic interpolation.
void refine(SliceState& s) {
  const std::size_t n = s.size();
  const numerics::Pchip th(s.r, s.theta), ph(s.r, s.phi);
  SliceState out;
  out.u = s.u;
  out.resize(2 * n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    out.r[2 * i] = s.r[i];
    out.theta[2 * i] = s.theta[i];
    out.phi[2 * i] = s.phi[i];
    out.label[2 * i] = s.label[i];
    if (i + 1 < n) {
      const double rm = 0.5 * (s.r[i] + s.r[i + 1]);
      out.r[2 * i + 1] = rm;
      out.theta[2 * i + 1] = th(rm);
      out.phi[2 * i + 1] = ph(rm);
      out.label[2 * i + 1] = 0.5 * (s.label[i] + s.label[i + 1]);
    }
  }
  s = std::move(out);
}

double max_mu(const SliceState& s) {
  double best = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) best = std::max(best, s.mu(i));
  return best;
}

void fill_horizon(HorizonReport& rep, const SliceState& s, const HypersurfaceStatus& st) {
  rep.outcome = Outcome::horizon;
  rep.u = s.u;
  rep.r = s.r[st.index];
  rep.m = s.m[st.index];
  rep.mu = 2.0 * rep.m / rep.r;
}

}  // namespace

RunResult run(const BVFunction& theta_of_r, const RunConfig& config) {
  config.validate();
  RunResult out;
  const HypersurfaceOptions hopts = config.hypersurface();
  SliceState slice = initial_slice(theta_of_r, config);
  auto st = integrate_hypersurface(slice, hopts);
  HorizonReport& rep = out.report;
  if (st.horizon) {
    fill_horizon(rep, slice, st);
    rep.note = "horizon on the initial cone";
    return out;
  }
  auto record = [&](const SliceState& s) {
    out.history.push_back({s.u, max_mu(s), s.m.back(), s.size()});
  };
  out.archive.push_back(slice);
  record(slice);
  double peak = max_mu(slice);
  std::deque<double> window{peak};

  const std::size_t n_ref = slice.size();
  const double du_nominal = config.nominal_step();
  const double du_floor = du_nominal * config.min_step_fraction;
  const double u_eps = 1e-12 * std::max(1.0, std::abs(config.u_max));
  std::size_t steps = 0;
  bool finished = false;

  auto dispersed = [&]() {
    if (peak <= config.dispersal_floor) return true;
    if (window.size() < static_cast<std::size_t>(config.dispersal_window) + 1) return false;
    for (std::size_t i = 1; i < window.size(); ++i) {
      if (window[i] > window[i - 1]) return false;
    }
    return window.back() < config.dispersal_ratio * peak;
  };

  while (!finished && slice.u < config.u_max - u_eps) {
    double du = std::min(du_nominal, config.u_max - slice.u);
    if (config.center_landing && slice.size() > 2) {
      const double land = landing_time(slice, 0);
      if (land >= du_nominal * config.retire_fraction && land < du) du = land;
    }
    StepResult res;
    while (true) {
      res = advance_slice(slice, du, config);
      if (res.status.horizon) {
        if (du > du_nominal / 64.0 && du * 0.5 >= du_floor) {
          du *= 0.5;
          continue;
        }
        break;
      }
      if (res.error_estimate > config.step_tolerance) {
        du *= 0.5;
        if (du < du_floor) {
          std::ostringstream msg;
          msg << "step control failed at u = " << slice.u << " (error estimate "
              << res.error_estimate << ")";
          throw StepControlFailure(msg.str());
        }
        continue;
      }
      break;
    }
    ++steps;
    if (res.status.horizon) {
      fill_horizon(rep, res.next, res.status);
      if (out.archive.back().u != slice.u) out.archive.push_back(slice);
      finished = true;
      break;
    }
    slice = std::move(res.next);
    if (config.regrid_fraction > 0.0 &&
        static_cast<double>(slice.size()) < config.regrid_fraction * static_cast<double>(n_ref)) {
      refine(slice);
      st = integrate_hypersurface(slice, hopts);
      if (st.horizon) {
        fill_horizon(rep, slice, st);
        finished = true;
        break;
      }
    }
    const double mm = max_mu(slice);
    peak = std::max(peak, mm);
    window.push_back(mm);
    while (window.size() > static_cast<std::size_t>(config.dispersal_window) + 1) window.pop_front();
    record(slice);
    const bool exhausted = slice.size() <= static_cast<std::size_t>(config.min_points);
    const bool last = slice.u >= config.u_max - u_eps;
    const bool stop_dispersal = config.stop_on_dispersal && dispersed();
    if (steps % static_cast<std::size_t>(config.output_every) == 0 || last || exhausted ||
        stop_dispersal) {
      out.archive.push_back(slice);
    }
    if (stop_dispersal) {
      rep.outcome = Outcome::dispersal;
      finished = true;
    } else if (exhausted) {
      rep.outcome = dispersed() ? Outcome::dispersal : Outcome::max_time_reached;
      rep.note = "grid exhausted at the center";
      finished = true;
    }
  }
  if (!finished) rep.outcome = dispersed() ? Outcome::dispersal : Outcome::max_time_reached;
  if (rep.outcome != Outcome::horizon) {
    rep.u = slice.u;
    std::size_t imax = 0;
    for (std::size_t i = 0; i < slice.size(); ++i) {
      if (slice.mu(i) > slice.mu(imax)) imax = i;
    }
    rep.r = slice.r[imax];
    rep.m = slice.m[imax];
    rep.mu = slice.mu(imax);
  }
  rep.peak_mu = peak;
  rep.steps = steps;
  return out;
}

CharacteristicSample sample_slice(const SliceState& s, double r) {
  CharacteristicSample out{};
  out.u = s.u;
  out.r = r;
  if (s.size() < 2) throw MalformedData("sample_slice: slice too small");
  auto interp = [&](const std::vector<double>& f) { return numerics::Pchip(s.r, f)(r); };
  out.m = interp(s.m);
  out.mu = 2.0 * out.m / r;
  out.theta = interp(s.theta);
  out.zeta = interp(s.zeta);
  out.lambda = -0.5 * std::log1p(-out.mu);
  out.nu = interp(s.nu);
  out.phi = interp(s.phi);
  return out;
}

namespace {

CharacteristicSample grid_sample(const SliceState& s, std::size_t i) {
  CharacteristicSample out{};
  out.u = s.u;
  out.r = s.r[i];
  out.m = s.m[i];
  out.mu = s.mu(i);
  out.theta = s.theta[i];
  out.zeta = s.zeta[i];
  out.lambda = s.lambda[i];
  out.nu = s.nu[i];
  out.phi = s.phi[i];
  return out;
}

std::optional<std::size_t> find_label(const SliceState& s, double label) {
  auto it = std::lower_bound(s.label.begin(), s.label.end(), label);
  if (it == s.label.end() || *it != label) return std::nullopt;
  return static_cast<std::size_t>(it - s.label.begin());
}

double velocity_at(const SliceState& s, double r) {
  std::vector<double> d(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) d[i] = s.nu[i] - s.lambda[i];
  return -0.5 * std::exp(numerics::Pchip(s.r, d)(r));
}

}  // namespace

CharacteristicTrace extract_incoming_curve(const std::vector<SliceState>& archive, double u0,
                                           double r0) {
  CharacteristicTrace trace;
  const double tol = 1e-12 * std::max(1.0, std::abs(u0));
  std::size_t k0 = archive.size();
  for (std::size_t k = 0; k < archive.size(); ++k) {
    if (std::abs(archive[k].u - u0) <= tol) {
      k0 = k;
      break;
    }
  }
  if (k0 == archive.size()) throw MalformedData("extract_incoming_curve: seed u is not an archived slice");
  const SliceState& first = archive[k0];
  if (!(r0 >= first.r.front() && r0 <= first.r.back())) {
    throw MalformedData("extract_incoming_curve: seed radius outside the archived slice");
  }

  // Follow the solver's own characteristic when the seed is a grid point.
  std::optional<double> label;
  for (std::size_t i = 0; i < first.size(); ++i) {
    if (std::abs(first.r[i] - r0) <= 1e-12 * r0) {
      label = first.label[i];
      break;
    }
  }

  auto push = [&](CharacteristicSample smp) {
    smp.u_affine = smp.u - u0 - 2.0 * r0;
    smp.u_null = -2.0 * smp.r;
    trace.samples.push_back(smp);
  };

  if (label) {
    for (std::size_t k = k0; k < archive.size(); ++k) {
      const auto idx = find_label(archive[k], *label);
      if (!idx) {
        trace.note = "curve reached the center";
        break;
      }
      push(grid_sample(archive[k], *idx));
    }
    return trace;
  }

  double r = r0;
  push(sample_slice(first, r));
  for (std::size_t k = k0; k + 1 < archive.size(); ++k) {
    const SliceState& a = archive[k];
    const SliceState& b = archive[k + 1];
    const double du = b.u - a.u;
    const double v1 = velocity_at(a, r);
    const double r_pred = r + du * v1;
    if (r_pred < b.r.front()) {
      trace.note = "curve reached the center";
      break;
    }
    if (r_pred > b.r.back()) {
      trace.truncated = true;
      trace.note = "curve left the archived domain";
      break;
    }
    const double v2 = velocity_at(b, r_pred);
    const double r_next = r + 0.5 * du * (v1 + v2);
    if (r_next < b.r.front()) {
      trace.note = "curve reached the center";
      break;
    }
    if (r_next > b.r.back()) {
      trace.truncated = true;
      trace.note = "curve left the archived domain";
      break;
    }
    r = r_next;
    push(sample_slice(b, r));
  }
  return trace;
}

}  // namespace nullcollapse::bondi
