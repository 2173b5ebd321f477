#include "nullcollapse/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"
#include "nullcollapse/errors.hpp"
#include "nullcollapse/numerics.hpp"

namespace nullcollapse::diagnostics {

namespace {

constexpr double kE = 2.718281828459045;

// Magnitude of the trace that tolerances on I are relative to: weak data has
// tiny I, and an absolute tolerance would call any slow drift settled.
double trace_scale(const exterior::BoundaryTrace& tr, double theta0_initial) {
  double s = std::abs(theta0_initial);
  for (double v : tr.I) s = std::max(s, std::abs(v));
  return s > 0.0 ? s : 1.0;
}

double interp_gamma(const exterior::BoundaryTrace& tr, double t) {
  return numerics::lagrange4(tr.t, tr.gamma, std::clamp(t, tr.t.front(), tr.t.back()));
}

}  // namespace

void EstimateConstants::validate() const {
  if (!(c0 > 0.0 && c0 <= 1.0 / kE + 1e-15)) throw ConfigError("constants.c0", "must lie in (0, 1/e]");
  if (!(c1 >= 1.0)) throw ConfigError("constants.c1", "must be >= 1");
  if (!(horizon_epsilon > 0.0 && horizon_epsilon < 1.0)) {
    throw ConfigError("constants.horizon_epsilon", "must lie in (0, 1)");
  }
}

double EstimateConstants::c2() const { return 16.0 * c1 * std::exp(1.0 / c1); }
double EstimateConstants::c3() const { return 9.5 * (kE - 2.0); }
double EstimateConstants::c4() const { return std::pow(2.0, 3.5) * c2() / kE; }
double EstimateConstants::c5() const { return -std::expm1(-c0) / (64.0 * c0); }
double EstimateConstants::c7() const { return (1.0 / 16.0) * -std::expm1(-1.0 / c0) * c0; }
double EstimateConstants::c9() const { return 512.0 * std::exp(2.0 * c0) * c1; }
double EstimateConstants::collapse_threshold(double delta) const { return c1 * delta * std::log(1.0 / delta); }

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::generic_thm21: return "generic-thm21";
    case Verdict::generic_thm31: return "generic-thm31";
    case Verdict::exceptional_candidate: return "exceptional-candidate";
    case Verdict::gamma_bounded: return "gamma-bounded";
    case Verdict::undecided: return "undecided";
  }
  return "undecided";
}

Verdict verdict_from_string(const std::string& s) {
  for (auto v : {Verdict::generic_thm21, Verdict::generic_thm31, Verdict::exceptional_candidate,
                 Verdict::gamma_bounded, Verdict::undecided}) {
    if (to_string(v) == s) return v;
  }
  throw MalformedData("unknown verdict '" + s + "'");
}

std::string to_string(LimitKind k) {
  switch (k) {
    case LimitKind::finite: return "finite";
    case LimitKind::plus_infinity: return "+inf";
    case LimitKind::minus_infinity: return "-inf";
    case LimitKind::undecided: return "undecided";
  }
  return "undecided";
}

namespace {

// Extremum of I over [T_k / 2, T_k] for T_k = T/4, T/2, T.
LimitEstimate tail_limit(const exterior::BoundaryTrace& tr, bool upper, const ClassifyOptions& o, double scale) {
  LimitEstimate est;
  const double T = tr.t.back();
  for (double frac : {0.25, 0.5, 1.0}) {
    const double hi = T * frac, lo = 0.5 * hi;
    double e = upper ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < tr.size(); ++i) {
      if (tr.t[i] < lo || tr.t[i] > hi) continue;
      e = upper ? std::max(e, tr.I[i]) : std::min(e, tr.I[i]);
    }
    est.windows.push_back(e);
  }
  const double e1 = est.windows[0], e2 = est.windows[1], e3 = est.windows[2];
  if (std::abs(e3 - e2) <= o.convergence_tol * scale && std::abs(e2 - e1) <= o.convergence_tol * scale) {
    est.kind = LimitKind::finite;
    est.value = e3;
  } else if (e1 < e2 && e2 < e3 && (e3 - e2) >= o.divergence_ratio * (e2 - e1)) {
    est.kind = LimitKind::plus_infinity;
    est.value = std::numeric_limits<double>::infinity();
  } else if (e1 > e2 && e2 > e3 && (e2 - e3) >= o.divergence_ratio * (e1 - e2)) {
    est.kind = LimitKind::minus_infinity;
    est.value = -std::numeric_limits<double>::infinity();
  }
  return est;
}

int case_from(const LimitEstimate& lo, const LimitEstimate& hi, double tol, double scale) {
  using K = LimitKind;
  if (lo.kind == K::finite && hi.kind == K::finite) {
    return std::abs(hi.value - lo.value) <= tol * scale ? 1 : 4;
  }
  if (lo.kind == K::plus_infinity && hi.kind == K::plus_infinity) return 2;
  if (lo.kind == K::minus_infinity && hi.kind == K::minus_infinity) return 3;
  if (lo.kind == K::finite && hi.kind == K::plus_infinity) return 5;
  if (lo.kind == K::minus_infinity && hi.kind == K::finite) return 6;
  if (lo.kind == K::minus_infinity && hi.kind == K::plus_infinity) return 7;
  return 0;
}

}  // namespace

CensorshipVerdict classify(const exterior::BoundaryTrace& trace, double theta0_initial,
                           const ClassifyOptions& opts, const BVFunction* vartheta) {
  CensorshipVerdict v;
  v.theta0_initial = theta0_initial;
  if (trace.size() < opts.min_samples || trace.t_end() < opts.min_time) {
    v.reason = "trace too short to assess the tail";
    return v;
  }
  const double T = trace.t_end();
  v.gamma_end = trace.gamma.back();
  v.gamma_rate = v.gamma_end / std::log(T);
  const double scale = trace_scale(trace, theta0_initial);
  v.lower = tail_limit(trace, false, opts, scale);
  v.upper = tail_limit(trace, true, opts, scale);
  v.case_id = case_from(v.lower, v.upper, opts.convergence_tol, scale);

  if (v.gamma_rate < opts.gamma_slope) {
    v.verdict = Verdict::gamma_bounded;
    v.reason = "gamma(T)/log T below the unboundedness threshold; mu0 -> 0 is then expected";
    return v;
  }
  if (v.case_id == 0) {
    v.reason = "tail extrema of I neither settled nor diverged over the window doublings";
    return v;
  }
  if (v.case_id != 1) {
    v.verdict = Verdict::generic_thm21;
    v.reason = "I has no finite limit";
    return v;
  }
  const double l = 0.5 * (v.lower.value + v.upper.value);
  if (std::abs(theta0_initial - l) > opts.equality_tol * scale) {
    v.verdict = Verdict::generic_thm21;
    v.reason = "theta0(0) differs from lim I";
    return v;
  }
  v.theorem31_applied = true;
  if (!vartheta) {
    v.reason = "theta0(0) equals lim I; the h/g test needs the initial data";
    return v;
  }
  const HgResult hg = h_and_g(*vartheta, trace, opts.theorem31);
  v.theorem31 = theorem31_test(hg, opts.theorem31);
  v.verdict = v.theorem31.verdict;
  v.reason = "theta0(0) equals lim I; " + v.theorem31.reason;
  return v;
}

void g_table(const exterior::BoundaryTrace& trace, std::vector<double>& s, std::vector<double>& g,
             double log_s_floor) {
  s.clear();
  g.clear();
  for (std::size_t i = trace.size(); i-- > 0;) {
    const double ls = -trace.t[i] - 5.0 * trace.gamma[i];
    if (ls < log_s_floor || ls > 0.0) continue;
    const double si = std::exp(ls);
    if (!s.empty() && !(si > s.back())) continue;
    s.push_back(si);
    g.push_back(std::exp(-0.25 * trace.gamma[i]));
  }
}

HgResult h_and_g(const BVFunction& vartheta, const exterior::BoundaryTrace& trace,
                 const Theorem31Options& opts) {
  HgResult out;
  if (vartheta.domain() != Domain::s_line) throw DomainMismatch("h_and_g: vartheta must live on the s-line");
  std::vector<double> gs, gv;
  g_table(trace, gs, gv, opts.log_s_floor);
  if (gs.size() < 2) {
    out.reason = "gamma does not grow enough to tabulate g below s = 1";
    return out;
  }
  // Sample points: a log-uniform subset of the table.
  const double ls_min = std::log10(gs.front()), ls_max = std::log10(gs.back());
  const int count = std::max(2, static_cast<int>((ls_max - ls_min) * opts.samples_per_decade) + 1);
  std::vector<double> samples;
  for (int i = 0; i < count; ++i) {
    samples.push_back(std::pow(10.0, ls_min + (ls_max - ls_min) * i / (count - 1)));
  }
  samples.front() = gs.front();
  samples.back() = gs.back();

  // Cumulative integral of psi^2 over breakpoints and samples.
  const double v0 = vartheta(0.0);
  auto psi2 = [&](double x) {
    const double p = std::exp(x) * vartheta(x) - v0;
    return p * p;
  };
  std::vector<double> cuts(samples);
  for (const auto& bp : vartheta.breakpoints()) {
    if (bp.x > 0.0 && bp.x < samples.back()) cuts.push_back(bp.x);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<double> cum(cuts.size());
  double acc = numerics::gauss_legendre(psi2, 0.0, cuts.front());
  cum[0] = acc;
  for (std::size_t i = 1; i < cuts.size(); ++i) {
    acc += numerics::gauss_legendre(psi2, cuts[i - 1], cuts[i]);
    cum[i] = acc;
  }
  std::vector<double> lgs(gs.size()), lgv(gv.size());
  for (std::size_t i = 0; i < gs.size(); ++i) {
    lgs[i] = std::log(gs[i]);
    lgv[i] = std::log(gv[i]);
  }
  for (double smp : samples) {
    const auto it = std::lower_bound(cuts.begin(), cuts.end(), smp);
    const double integral = cum[static_cast<std::size_t>(it - cuts.begin())];
    const double h = std::sqrt(std::max(0.0, integral) / smp);
    const double g = std::exp(numerics::linear_interp(lgs, lgv, std::log(smp)));
    out.s.push_back(smp);
    out.h.push_back(h);
    out.g.push_back(g);
    out.ratio.push_back(h / g);
  }
  out.ok = true;
  return out;
}

Theorem31Outcome theorem31_test(const HgResult& hg, const Theorem31Options& opts) {
  Theorem31Outcome out;
  if (!hg.ok) {
    out.reason = hg.reason;
    return out;
  }
  const double l_lo = std::log10(hg.s.front()), l_hi = std::log10(hg.s.back());
  const int decades = static_cast<int>(std::floor(l_hi - l_lo)) - opts.floor_margin_decades;
  out.decades = std::max(0, decades);
  if (decades < 2 * opts.min_decades) {
    out.reason = "too few decades of s resolved for the h/g test";
    return out;
  }
  std::vector<double> ls(hg.s.size()), lr(hg.s.size());
  for (std::size_t i = 0; i < hg.s.size(); ++i) {
    ls[i] = std::log10(hg.s[i]);
    lr[i] = hg.ratio[i];
  }
  // Lower half of the decades above the margin, i.e. the asymptotic end s -> 0.
  const double start = l_lo + opts.floor_margin_decades;
  const int tested = decades / 2;
  out.min_growth = std::numeric_limits<double>::infinity();
  for (int d = 0; d < tested; ++d) {
    const double upper = numerics::linear_interp(ls, lr, start + d);
    const double lower = numerics::linear_interp(ls, lr, start + d + 1);
    const double growth = lower > 0.0 ? upper / lower : (upper > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    out.min_growth = std::min(out.min_growth, growth);
  }
  if (out.min_growth >= opts.growth_factor) {
    out.verdict = Verdict::generic_thm31;
    out.reason = "h/g grows in every decade toward s = 0";
  } else {
    out.verdict = Verdict::exceptional_candidate;
    out.reason = "h/g does not grow in every decade toward s = 0";
  }
  return out;
}

PsiProfiles psi_fields(const exterior::ExteriorState& state, const exterior::BoundaryTrace& trace) {
  const auto b = trace.at(state.t);
  const double eg = std::exp(-interp_gamma(trace, state.t));
  PsiProfiles p;
  const std::size_t n = state.size();
  p.psi.resize(n);
  p.omega.resize(n);
  p.rho.resize(n);
  p.xi.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double es = std::exp(state.s[j]);
    const double w = 1.0 - state.beta[j];
    p.psi[j] = eg * (state.theta[j] * es - b.theta0);
    p.omega[j] = w * (state.kappa[j] - 2.0) - (b.kappa0 - 2.0);
    p.xi[j] = w * es * state.zeta[j] - b.zeta0;
    p.rho[j] = eg * (p.omega[j] * b.theta0 + p.xi[j]);
  }
  return p;
}

bool EstimateReport::passed() const {
  return std::all_of(entries.begin(), entries.end(), [](const EstimateEntry& e) { return e.passed(); });
}

std::string EstimateReport::to_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& e : entries) {
    j.push_back({{"name", e.name},
                 {"passed", e.passed()},
                 {"max_violation", e.max_violation},
                 {"location", e.location},
                 {"tolerance", e.tolerance},
                 {"violations", e.violations}});
  }
  return j.dump(2);
}

namespace {

// Tracks the worst excess over a bound.
struct Worst {
  EstimateEntry& e;
  bool any = false;
  void add(double excess, double where) {
    if (!any || excess > e.max_violation) {
      e.max_violation = excess;
      e.location = where;
      any = true;
    }
    if (excess > e.tolerance) ++e.violations;
  }
};

}  // namespace

EstimateEntry eta_bound_check(const exterior::ExteriorState& state, const exterior::BoundaryTrace& trace,
                              const EstimateConstants& constants, double* calibrated_c1) {
  EstimateEntry e;
  e.name = "eta-bound";
  e.tolerance = 1e-10;
  Worst w{e};
  const auto b = trace.at(state.t);
  const double mu0 = 1.0 - 1.0 / b.kappa0;
  double c1_needed = 0.0;
  for (std::size_t j = 0; j < state.size(); ++j) {
    const double s = state.s[j];
    if (s <= 0.0 || s > constants.c0) continue;
    const double eta = (1.0 - 1.0 / state.kappa[j]) - mu0 * std::exp(-s);
    const double shape = s * std::log(1.0 / s);
    w.add(eta - constants.c1 * shape, s);
    c1_needed = std::max(c1_needed, eta / shape);
  }
  if (calibrated_c1) *calibrated_c1 = c1_needed;
  return e;
}

std::vector<EstimateEntry> lemma_checks(const exterior::BoundaryTrace& trace, double rel_tol) {
  trace.validate();
  EstimateEntry k;
  k.name = "kappa0-growth";
  k.tolerance = 0.0;
  Worst wk{k};
  EstimateEntry m;
  m.name = "mu0-window";
  m.tolerance = 0.0;
  Worst wm{m};
  const double k00 = trace.kappa0.front();
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const double bound = 2.0 * k00 * std::exp(trace.gamma[i]);
    wk.add(trace.kappa0[i] - bound - rel_tol * bound, trace.t[i]);
    const double t = trace.t[i];
    if (t - 1.0 < trace.t.front()) continue;
    const double g0 = interp_gamma(trace, t - 1.0);
    const double mb = std::expm1(trace.gamma[i] - g0) / -std::expm1(-1.0);
    wm.add(trace.mu0[i] - mb - rel_tol * std::max(1.0, mb), t);
  }
  return {k, m};
}

double Decomposition::drift() const {
  double d = 0.0;
  for (double v : psi_hat) d = std::max(d, std::abs(v - psi_hat.front()));
  return d;
}

Decomposition decomposition(const exterior::CharacteristicHistory& ch, const exterior::BoundaryTrace& trace) {
  Decomposition d;
  std::vector<double> damped_rho;
  for (const auto& smp : ch.samples) {
    const auto b = trace.at(smp.t);
    const double eg = std::exp(-interp_gamma(trace, smp.t));
    const double es = std::exp(smp.s), w = 1.0 - smp.beta;
    const double omega = w * (smp.kappa - 2.0) - (b.kappa0 - 2.0);
    const double xi = w * es * smp.zeta - b.zeta0;
    d.t.push_back(smp.t);
    d.s.push_back(smp.s);
    d.psi.push_back(eg * (smp.theta * es - b.theta0));
    d.omega.push_back(omega);
    d.rho.push_back(eg * (omega * b.theta0 + xi));
  }
  if (d.t.empty()) return d;
  d.tau = numerics::cumulative_trapezoid(d.t, d.omega);
  for (std::size_t k = 0; k < d.t.size(); ++k) {
    d.psi_tilde.push_back(std::exp(-d.tau[k]) * d.psi[k]);
    damped_rho.push_back(std::exp(-d.tau[k]) * d.rho[k]);
  }
  d.sigma = numerics::cumulative_trapezoid(d.t, damped_rho);
  for (std::size_t k = 0; k < d.t.size(); ++k) d.psi_hat.push_back(d.psi_tilde[k] - d.sigma[k]);
  return d;
}

double transport_residual(const Decomposition& d) {
  double worst = 0.0;
  for (std::size_t k = 1; k + 1 < d.t.size(); ++k) {
    const double h0 = d.t[k] - d.t[k - 1], h1 = d.t[k + 1] - d.t[k];
    if (h0 <= 0.0 || h1 <= 0.0) continue;
    // Three-point derivative on an uneven stencil.
    const double dpsi = (-h1 / (h0 * (h0 + h1))) * d.psi[k - 1] + ((h1 - h0) / (h0 * h1)) * d.psi[k] +
                        (h0 / (h1 * (h0 + h1))) * d.psi[k + 1];
    worst = std::max(worst, std::abs(dpsi - d.omega[k] * d.psi[k] - d.rho[k]));
  }
  return worst;
}

EstimateEntry jacobian_check(const exterior::CharacteristicHistory& minus,
                             const exterior::CharacteristicHistory& mid,
                             const exterior::CharacteristicHistory& plus,
                             const exterior::BoundaryTrace& trace) {
  EstimateEntry e;
  e.name = "characteristic-jacobian";
  e.tolerance = 1e-2;
  const std::size_t n = std::min({minus.samples.size(), mid.samples.size(), plus.samples.size()});
  const double spread = plus.s0 - minus.s0;
  if (n == 0 || !(spread > 0.0)) throw MalformedData("jacobian_check: need three ordered characteristics");
  const Decomposition d = decomposition(mid, trace);
  Worst w{e};
  for (std::size_t k = 0; k < n; ++k) {
    const double t = mid.samples[k].t;
    if (std::abs(minus.samples[k].t - t) > 1e-12 || std::abs(plus.samples[k].t - t) > 1e-12) {
      throw MalformedData("jacobian_check: characteristics sampled at different times");
    }
    const double gap = plus.samples[k].s - minus.samples[k].s;
    if (!(gap > 0.0)) {
      w.add(std::numeric_limits<double>::infinity(), t);  // crossing
      continue;
    }
    const double exact = std::exp(t - interp_gamma(trace, t) - d.tau[k]);
    w.add(std::abs(gap / spread - exact) / exact, t);
  }
  return e;
}

CurvatureProfile gauss_curvature(const bondi::SliceState& slice) {
  CurvatureProfile c;
  for (std::size_t i = 0; i < slice.size(); ++i) {
    const double r = slice.r[i];
    if (r <= 0.0) continue;
    const double k = (slice.mu(i) + slice.theta[i] * slice.zeta[i] * std::exp(-2.0 * slice.lambda[i])) / (r * r);
    c.r.push_back(r);
    c.K.push_back(k);
  }
  if (c.r.size() >= 3) {
    // Quadratic through the three innermost points, evaluated at r = 0.
    const double x0 = c.r[0], x1 = c.r[1], x2 = c.r[2];
    c.center = c.K[0] * (x1 * x2) / ((x0 - x1) * (x0 - x2)) + c.K[1] * (x0 * x2) / ((x1 - x0) * (x1 - x2)) +
               c.K[2] * (x0 * x1) / ((x2 - x0) * (x2 - x1));
  } else if (!c.K.empty()) {
    c.center = c.K.front();
  }
  return c;
}

namespace {

// Steps of `m` against `sign` (+1: must not decrease) measured against the
// second differences just outside the step. Stencils touching the step would
// excuse any isolated jump, since the jump itself shows up as curvature.
void monotone_steps(const std::vector<double>& m, const std::vector<double>& where, double sign,
                    double factor, Worst& w) {
  const std::size_t n = m.size();
  if (n < 2) return;
  double scale = 0.0;
  for (double v : m) scale = std::max(scale, std::abs(v));
  const double floor = 1e-14 * scale;
  auto second = [&](std::size_t c) { return std::abs(m[c + 1] - 2.0 * m[c] + m[c - 1]); };
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double step = sign * (m[i + 1] - m[i]);
    double curv = 0.0;
    if (i >= 3) curv = std::max(curv, second(i - 2));
    if (i + 4 < n) curv = std::max(curv, second(i + 3));
    w.add(-step - factor * curv - floor, where[i]);
  }
}

}  // namespace

EstimateEntry mass_monotonicity_in_r(const std::vector<bondi::SliceState>& archive, double factor) {
  EstimateEntry e;
  e.name = "mass-nondecreasing-in-r";
  Worst w{e};
  for (const auto& s : archive) monotone_steps(s.m, s.r, 1.0, factor, w);
  return e;
}

EstimateEntry mass_monotonicity_along(const bondi::CharacteristicTrace& curve, double factor) {
  EstimateEntry e;
  e.name = "mass-nonincreasing-along-curve";
  Worst w{e};
  std::vector<double> m, u;
  for (const auto& smp : curve.samples) {
    m.push_back(smp.m);
    u.push_back(smp.u);
  }
  monotone_steps(m, u, -1.0, factor, w);
  return e;
}

EstimateEntry kappa_at_least_one(const std::vector<bondi::SliceState>& archive) {
  EstimateEntry e;
  e.name = "kappa-at-least-one";
  Worst w{e};
  for (const auto& s : archive) {
    // kappa >= 1 is lambda >= 0.
    for (std::size_t i = 0; i < s.size(); ++i) w.add(-s.lambda[i], s.r[i]);
  }
  return e;
}

std::string to_json(const CensorshipVerdict& v) {
  auto limit = [](const LimitEstimate& l) {
    nlohmann::ordered_json j;
    j["kind"] = to_string(l.kind);
    if (l.kind == LimitKind::finite) j["value"] = l.value;
    j["windows"] = l.windows;
    return j;
  };
  nlohmann::ordered_json j;
  j["case"] = v.case_id;
  j["verdict"] = to_string(v.verdict);
  j["lower"] = limit(v.lower);
  j["upper"] = limit(v.upper);
  j["theta0_initial"] = v.theta0_initial;
  j["gamma_end"] = v.gamma_end;
  j["gamma_rate"] = v.gamma_rate;
  j["theorem31_applied"] = v.theorem31_applied;
  if (v.theorem31_applied) {
    j["theorem31"] = {{"verdict", to_string(v.theorem31.verdict)},
                      {"decades", v.theorem31.decades},
                      {"min_growth", v.theorem31.min_growth},
                      {"reason", v.theorem31.reason}};
  }
  j["reason"] = v.reason;
  return j.dump(2);
}

}  // namespace nullcollapse::diagnostics
