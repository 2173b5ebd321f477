#include "nullcollapse/exterior.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "nullcollapse/errors.hpp"
#include "nullcollapse/numerics.hpp"

namespace nullcollapse::exterior {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

BoundaryValues BoundaryTrace::at(double tt) const {
  if (t.empty()) throw MalformedData("boundary trace is empty");
  const double v = std::clamp(tt, t.front(), t.back());
  return {numerics::lagrange4(t, kappa0, v), numerics::lagrange4(t, theta0, v), numerics::lagrange4(t, zeta0, v)};
}

void BoundaryTrace::validate() const {
  const std::size_t n = t.size();
  if (n == 0) throw MalformedData("boundary trace is empty");
  for (const auto* v : {&kappa0, &theta0, &zeta0, &mu0, &gamma, &I}) {
    if (v->size() != n) throw MalformedData("boundary trace columns have unequal lengths");
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (!(t[i] > t[i - 1])) throw MalformedData("boundary trace times must increase");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(kappa0[i]) || !std::isfinite(theta0[i]) || !std::isfinite(zeta0[i]) ||
        !std::isfinite(gamma[i]) || !std::isfinite(I[i])) {
      throw MalformedData("boundary trace has non-finite entries at t = " + std::to_string(t[i]));
    }
  }
}

void accumulate(BoundaryTrace& tr) {
  const std::size_t n = tr.t.size();
  std::vector<double> k1(n);
  for (std::size_t i = 0; i < n; ++i) k1[i] = tr.kappa0[i] - 1.0;
  tr.gamma = numerics::cumulative_trapezoid(tr.t, k1);
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = -std::exp(-tr.gamma[i]) * tr.zeta0[i];
  tr.I = numerics::cumulative_trapezoid(tr.t, w);
  tr.mu0.resize(n);
  tr.identity_residual = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    tr.mu0[i] = 1.0 - 1.0 / tr.kappa0[i];
    const double id = std::exp(tr.gamma[i]) * (tr.theta0[0] - tr.I[i]);
    tr.identity_residual = std::max(tr.identity_residual, std::abs(tr.theta0[i] - id));
  }
}

BoundaryTrace boundary_evolve(double kappa0_initial, double theta0_initial,
                              const std::function<double(double)>& zeta0, double t_end,
                              const BoundaryOptions& opts) {
  if (!(kappa0_initial >= 1.0)) throw MalformedData("boundary_evolve: kappa0(0) must be >= 1");
  if (!(t_end > 0.0) || !(opts.dt > 0.0)) throw MalformedData("boundary_evolve: need t_end, dt > 0");
  using Y = std::array<double, 4>;  // kappa0, theta0, gamma, I
  auto rhs = [&](double t, const Y& y) {
    const double z = zeta0(t);
    return Y{y[0] * (y[0] - 1.0 - z * z), (y[0] - 1.0) * y[1] + z, y[0] - 1.0,
             -std::exp(-y[2]) * z};
  };
  auto axpy = [](const Y& y, double h, const Y& k) {
    return Y{y[0] + h * k[0], y[1] + h * k[1], y[2] + h * k[2], y[3] + h * k[3]};
  };

  BoundaryTrace tr;
  Y y{kappa0_initial, theta0_initial, 0.0, 0.0};
  auto record = [&](double t) {
    tr.t.push_back(t);
    tr.kappa0.push_back(y[0]);
    tr.theta0.push_back(y[1]);
    tr.zeta0.push_back(zeta0(t));
    tr.mu0.push_back(1.0 - 1.0 / y[0]);
    tr.gamma.push_back(y[2]);
    tr.I.push_back(y[3]);
    const double id = std::exp(y[2]) * (theta0_initial - y[3]);
    tr.identity_residual = std::max(tr.identity_residual, std::abs(y[1] - id));
  };
  record(0.0);
  const auto steps = static_cast<std::size_t>(std::ceil(t_end / opts.dt - 1e-9));
  double t = 0.0;
  for (std::size_t k = 1; k <= steps; ++k) {
    const double t_next = std::min(t_end, static_cast<double>(k) * opts.dt);
    const double span = t_next - t;
    const double rate = std::max({1.0, std::abs(y[0]), std::abs(zeta0(t))});
    const int sub = std::max(1, static_cast<int>(std::ceil(span * rate / opts.max_growth)));
    const double h = span / sub;
    bool blown = false;
    for (int j = 0; j < sub; ++j) {
      const double tj = t + j * h;
      const Y a = rhs(tj, y);
      const Y b = rhs(tj + 0.5 * h, axpy(y, 0.5 * h, a));
      const Y c = rhs(tj + 0.5 * h, axpy(y, 0.5 * h, b));
      const Y d = rhs(tj + h, axpy(y, h, c));
      Y next;
      for (int i = 0; i < 4; ++i) next[i] = y[i] + h / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]);
      if (!std::isfinite(next[0]) || next[0] > opts.kappa_cap || next[0] < 1.0 - 1e-12) {
        blown = true;
        break;
      }
      y = next;
    }
    if (blown) {
      tr.truncated = true;
      std::ostringstream msg;
      msg << "kappa0 blew up after t = " << t;
      tr.note = msg.str();
      break;
    }
    t = t_next;
    record(t);
  }
  return tr;
}

BoundaryTrace manufactured_trace(const std::function<double(double)>& gamma,
                                 const std::function<double(double)>& dgamma,
                                 const std::function<double(double)>& I,
                                 const std::function<double(double)>& dI, double theta0_initial,
                                 double t_end, double dt) {
  if (!(t_end > 0.0) || !(dt > 0.0)) throw MalformedData("manufactured_trace: need t_end, dt > 0");
  BoundaryTrace tr;
  const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = std::min(t_end, static_cast<double>(k) * dt);
    const double g = gamma(t);
    tr.t.push_back(t);
    tr.gamma.push_back(g);
    tr.I.push_back(I(t));
    tr.kappa0.push_back(1.0 + dgamma(t));
    tr.mu0.push_back(1.0 - 1.0 / tr.kappa0.back());
    tr.zeta0.push_back(-std::exp(g) * dI(t));
    tr.theta0.push_back(std::exp(g) * (theta0_initial - tr.I.back()));
  }
  return tr;
}

BoundaryTrace trace_from_curve(const bondi::CharacteristicTrace& curve) {
  if (curve.samples.size() < 2) throw MalformedData("trace_from_curve: curve has fewer than two samples");
  const double a = curve.samples.front().r;
  BoundaryTrace tr;
  for (const auto& smp : curve.samples) {
    tr.t.push_back(std::log(a / smp.r));
    tr.kappa0.push_back(std::exp(2.0 * smp.lambda));
    tr.theta0.push_back(smp.theta);
    tr.zeta0.push_back(smp.zeta);
  }
  accumulate(tr);
  tr.truncated = curve.truncated;
  tr.note = curve.note;
  return tr;
}

void write_trace_csv(std::ostream& out, const BoundaryTrace& tr) {
  out << "t,kappa0,theta0,zeta0,gamma,I\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < tr.size(); ++i) {
    out << tr.t[i] << ',' << tr.kappa0[i] << ',' << tr.theta0[i] << ',' << tr.zeta0[i] << ','
        << tr.gamma[i] << ',' << tr.I[i] << '\n';
  }
}

void write_trace_csv(const std::filesystem::path& path, const BoundaryTrace& tr) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write trace " + path.string());
  write_trace_csv(f, tr);
}

BoundaryTrace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw MalformedData("trace csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,kappa0,theta0,zeta0,gamma,I") throw MalformedData("trace csv: unexpected header '" + line + "'");
  BoundaryTrace tr;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::array<double, 6> v{};
    std::istringstream ss(line);
    for (std::size_t c = 0; c < v.size(); ++c) {
      std::string cell;
      if (!std::getline(ss, cell, ',')) {
        throw MalformedData("trace csv: line " + std::to_string(lineno) + " has too few columns");
      }
      try {
        std::size_t used = 0;
        v[c] = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw MalformedData("trace csv: line " + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    tr.t.push_back(v[0]);
    tr.kappa0.push_back(v[1]);
    tr.theta0.push_back(v[2]);
    tr.zeta0.push_back(v[3]);
    tr.gamma.push_back(v[4]);
    tr.I.push_back(v[5]);
    tr.mu0.push_back(1.0 - 1.0 / v[1]);
  }
  if (tr.t.empty()) throw MalformedData("trace csv: no rows");
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const double id = std::exp(tr.gamma[i]) * (tr.theta0[0] - tr.I[i]);
    tr.identity_residual = std::max(tr.identity_residual, std::abs(tr.theta0[i] - id));
  }
  tr.validate();
  return tr;
}

BoundaryTrace read_trace_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open trace " + path.string());
  return read_trace_csv(f);
}

void ExteriorConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("exterior", what); };
  if (!(s_max > 0.0)) fail("s_max must be positive");
  if (points < 8) fail("points must be >= 8");
  if (!(cfl > 0.0)) fail("cfl must be positive");
  if (!(kappa_cap > 1.0)) fail("kappa_cap must exceed 1");
  if (corrector_passes < 1) fail("corrector_passes must be >= 1");
}

RebuildStatus rebuild(ExteriorState& st, const BoundaryValues& b, double kappa_cap) {
  const std::size_t n = st.size();
  if (st.theta.size() != n) throw MalformedData("rebuild: theta and grid sizes differ");
  st.kappa.assign(n, kNaN);
  st.beta.assign(n, kNaN);
  st.zeta.assign(n, kNaN);
  RebuildStatus status;
  st.theta[0] = b.theta0;
  st.kappa[0] = b.kappa0;
  st.beta[0] = 0.0;
  st.zeta[0] = b.zeta0;
  double y = 1.0 / b.kappa0;  // 1 - mu
  double q = 0.0;             // log(1 - beta)
  for (std::size_t j = 1; j < n; ++j) {
    const double h = st.s[j] - st.s[j - 1];
    const double a0 = 1.0 + st.theta[j - 1] * st.theta[j - 1];
    const double a1 = 1.0 + st.theta[j] * st.theta[j];
    y = (y * (1.0 - 0.5 * h * a0) + h) / (1.0 + 0.5 * h * a1);
    const double k = 1.0 / y;
    if (!(y > 0.0) || k > kappa_cap) {
      status.horizon = true;
      status.index = j;
      return status;
    }
    st.kappa[j] = k;
    q += 0.5 * h * ((st.kappa[j - 1] - 2.0) + (k - 2.0));
    st.beta[j] = -std::expm1(q);
    st.zeta[j] = (st.zeta[j - 1] * (1.0 - 0.5 * h * (st.kappa[j - 1] - 1.0)) -
                  0.5 * h * (st.theta[j - 1] + st.theta[j])) /
                 (1.0 + 0.5 * h * (k - 1.0));
  }
  return status;
}

ExteriorState initial_state(const std::function<double(double)>& theta_of_s, const BoundaryValues& b0,
                            const ExteriorConfig& config) {
  config.validate();
  ExteriorState st;
  const auto n = static_cast<std::size_t>(config.points);
  st.s.resize(n);
  st.theta.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    st.s[j] = j + 1 == n ? config.s_max : config.ds() * static_cast<double>(j);
    st.theta[j] = theta_of_s(st.s[j]);
  }
  BoundaryValues b = b0;
  b.theta0 = st.theta[0];
  const auto status = rebuild(st, b, config.kappa_cap);
  if (status.horizon) throw MalformedData("initial exterior slice already exceeds the kappa cap");
  return st;
}

namespace {

std::vector<double> transport_rate(const ExteriorState& st) {
  std::vector<double> f(st.size());
  for (std::size_t j = 0; j < st.size(); ++j) {
    f[j] = (1.0 - st.beta[j]) * ((st.kappa[j] - 1.0) * st.theta[j] + st.zeta[j]);
  }
  return f;
}

}  // namespace

ExteriorStepResult step_exterior(const ExteriorState& st, const BoundaryValues& nb, double dt,
                                 const ExteriorConfig& config) {
  const std::size_t n = st.size();
  // Foot points follow the monotone interpolant of beta; transported values use
  // an unlimited cubic, since limiting at extrema costs an order over many steps.
  const numerics::Pchip beta0(st.s, st.beta);
  const std::vector<double> r0 = transport_rate(st);
  auto theta0 = [&](double v) { return numerics::lagrange4(st.s, st.theta, v); };
  auto rate0 = [&](double v) { return numerics::lagrange4(st.s, r0, v); };
  const double s_hi = st.s.back();
  auto clamp_foot = [&](double f) { return std::clamp(f, 0.0, s_hi); };

  ExteriorStepResult out;
  ExteriorState pred = st;
  pred.t = st.t + dt;
  std::vector<double> foot(n, 0.0);
  for (std::size_t j = 1; j < n; ++j) {
    foot[j] = clamp_foot(st.s[j] - dt * beta0(st.s[j]));
    pred.theta[j] = theta0(foot[j]) + dt * rate0(foot[j]);
  }
  out.status = rebuild(pred, nb, config.kappa_cap);
  if (out.status.horizon) {
    out.next = std::move(pred);
    return out;
  }

  const std::vector<double> rate1 = transport_rate(pred);
  ExteriorState next = pred;
  for (std::size_t j = 1; j < n; ++j) {
    double f = foot[j];
    for (int pass = 0; pass < config.corrector_passes; ++pass) {
      f = clamp_foot(st.s[j] - 0.5 * dt * (beta0(f) + pred.beta[j]));
    }
    next.theta[j] = theta0(f) + 0.5 * dt * (rate0(f) + rate1[j]);
  }
  out.status = rebuild(next, nb, config.kappa_cap);
  out.next = std::move(next);
  return out;
}

namespace {

ExteriorSample sample_at(double s, const std::array<numerics::Pchip, 4>& f) {
  return {0.0, s, f[0](s), f[1](s), f[2](s), f[3](s)};
}

std::array<numerics::Pchip, 4> interpolants(const ExteriorState& st) {
  return {numerics::Pchip(st.s, st.kappa), numerics::Pchip(st.s, st.beta),
          numerics::Pchip(st.s, st.theta), numerics::Pchip(st.s, st.zeta)};
}

}  // namespace

ExteriorRun run_exterior(const ExteriorState& initial, const BoundaryTrace& trace,
                         const std::vector<double>& output_times, const std::vector<double>& seeds,
                         const ExteriorConfig& config) {
  config.validate();
  ExteriorRun run;
  std::vector<double> outs = output_times;
  std::sort(outs.begin(), outs.end());
  const double dt_nominal = config.cfl * config.ds();
  const double t_stop = std::min(outs.empty() ? initial.t : outs.back(), trace.t_end());
  const double eps = 1e-12 * std::max(1.0, std::abs(t_stop));

  ExteriorState st = initial;
  run.outputs.push_back(st);
  auto f0 = interpolants(st);
  std::vector<double> pos = seeds;
  run.characteristics.resize(seeds.size());
  for (std::size_t c = 0; c < seeds.size(); ++c) {
    run.characteristics[c].s0 = seeds[c];
    auto smp = sample_at(seeds[c], f0);
    smp.t = st.t;
    run.characteristics[c].samples.push_back(smp);
  }

  std::size_t next_out = 0;
  while (next_out < outs.size() && outs[next_out] <= st.t + eps) ++next_out;
  while (st.t < t_stop - eps) {
    double target = next_out < outs.size() ? std::min(outs[next_out], t_stop) : t_stop;
    const double dt = std::min(dt_nominal, target - st.t);
    auto res = step_exterior(st, trace.at(st.t + dt), dt, config);
    ++run.steps;
    if (res.status.horizon) {
      run.horizon = true;
      break;
    }
    auto f1 = interpolants(res.next);
    const double s_hi = st.s.back();
    for (std::size_t c = 0; c < pos.size(); ++c) {
      const double v0 = f0[1](pos[c]);
      const double sp = std::clamp(pos[c] + dt * v0, 0.0, s_hi);
      pos[c] = std::clamp(pos[c] + 0.5 * dt * (v0 + f1[1](sp)), 0.0, s_hi);
      auto smp = sample_at(pos[c], f1);
      smp.t = res.next.t;
      run.characteristics[c].samples.push_back(smp);
    }
    st = std::move(res.next);
    f0 = std::move(f1);
    if (next_out < outs.size() && st.t >= outs[next_out] - eps) {
      st.t = outs[next_out];
      run.outputs.push_back(st);
      while (next_out < outs.size() && outs[next_out] <= st.t + eps) ++next_out;
    }
  }
  run.t_reached = st.t;
  return run;
}

IntegralForms integral_forms(const ExteriorState& st, const BoundaryValues& b) {
  const std::size_t n = st.size();
  IntegralForms out;
  std::vector<double> th2(n);
  for (std::size_t j = 0; j < n; ++j) th2[j] = st.theta[j] * st.theta[j];
  out.nu_plus_lambda = numerics::cumulative_trapezoid(st.s, th2, std::log(b.kappa0));
  std::vector<double> w(n);
  for (std::size_t j = 0; j < n; ++j) w[j] = std::exp(out.nu_plus_lambda[j] + st.s[j]);
  out.exp_nml_plus_s = numerics::cumulative_trapezoid(st.s, w, 1.0);
  std::vector<double> e(n), et(n);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = out.exp_nml_plus_s[j] * std::exp(-st.s[j]);
    et[j] = e[j] * st.theta[j];
  }
  const auto xi = numerics::cumulative_trapezoid(st.s, et, 0.0);
  out.zeta.resize(n);
  out.kappa.resize(n);
  out.beta.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    out.zeta[j] = (b.zeta0 - xi[j]) / e[j];
    out.kappa[j] = std::exp(out.nu_plus_lambda[j]) / e[j];
    out.beta[j] = 1.0 - e[j] * std::exp(-st.s[j]);
  }
  return out;
}

double MappedArchive::at(const std::vector<std::vector<double>>& field, double t, std::size_t j) const {
  const std::size_t n = times.size();
  if (n == 0) return kNaN;
  if (n < 4) {
    std::vector<double> y(n);
    for (std::size_t k = 0; k < n; ++k) y[k] = field[k][j];
    return numerics::linear_interp(times, y, t);
  }
  const std::size_t k = numerics::locate(times, t);
  std::size_t lo = k == 0 ? 0 : k - 1;
  if (lo + 4 > n) lo = n - 4;
  std::vector<double> x(times.begin() + lo, times.begin() + lo + 4), y(4);
  for (std::size_t i = 0; i < 4; ++i) {
    y[i] = field[lo + i][j];
    if (!std::isfinite(y[i])) return kNaN;
  }
  return numerics::lagrange4(x, y, t);
}

MappedArchive map_archive(const std::vector<bondi::SliceState>& archive,
                          const bondi::CharacteristicTrace& curve, const std::vector<double>& s_nodes) {
  if (curve.samples.empty()) throw MalformedData("map_archive: empty curve");
  MappedArchive out;
  out.s = s_nodes;
  const double a = curve.samples.front().r;
  const std::size_t nj = s_nodes.size();
  std::size_t k = 0;
  for (const auto& smp : curve.samples) {
    while (k < archive.size() && archive[k].u != smp.u) ++k;
    if (k == archive.size()) throw MalformedData("map_archive: curve sample without a matching slice");
    const auto& sl = archive[k];
    std::vector<double> d(sl.size());
    for (std::size_t i = 0; i < sl.size(); ++i) d[i] = sl.nu[i] - sl.lambda[i];
    const numerics::Pchip lam(sl.r, sl.lambda), th(sl.r, sl.theta), ze(sl.r, sl.zeta), dd(sl.r, d);
    const double d_curve = smp.nu - smp.lambda;
    std::vector<double> kap(nj, kNaN), bet(nj, kNaN), the(nj, kNaN), zet(nj, kNaN);
    for (std::size_t j = 0; j < nj; ++j) {
      const double r = smp.r * std::exp(s_nodes[j]);
      if (r > sl.r.back() * (1.0 + 1e-12)) break;
      const bool at_curve = j == 0;
      kap[j] = std::exp(2.0 * (at_curve ? smp.lambda : lam(r)));
      the[j] = at_curve ? smp.theta : th(r);
      zet[j] = at_curve ? smp.zeta : ze(r);
      bet[j] = at_curve ? 0.0 : -std::expm1(dd(r) - d_curve - s_nodes[j]);
    }
    out.times.push_back(std::log(a / smp.r));
    out.kappa.push_back(std::move(kap));
    out.beta.push_back(std::move(bet));
    out.theta.push_back(std::move(the));
    out.zeta.push_back(std::move(zet));
  }
  return out;
}

double FieldDiscrepancy::max() const { return std::max({kappa, beta, theta, zeta}); }

CrosscheckReport crosscheck_bondi(const std::vector<bondi::SliceState>& archive,
                                  const CrosscheckOptions& opts) {
  CrosscheckReport rep;
  const auto curve = bondi::extract_incoming_curve(archive, opts.u0, opts.a);
  if (curve.samples.size() < 4) throw MalformedData("crosscheck: archive covers too little of the curve");
  rep.trace = trace_from_curve(curve);

  const bondi::SliceState* first = nullptr;
  for (const auto& sl : archive) {
    if (sl.u == curve.samples.front().u) first = &sl;
  }
  ExteriorConfig cfg = opts.exterior;
  const double cover = std::log(first->r.back() / opts.a);
  if (!(cover > 0.0)) throw MalformedData("crosscheck: seed lies at the outer edge of the archive");
  cfg.s_max = std::min(cfg.s_max, cover);
  const numerics::Pchip th0(first->r, first->theta);
  const BoundaryValues b0 = rep.trace.at(0.0);
  const ExteriorState init = initial_state([&](double s) { return th0(opts.a * std::exp(s)); }, b0, cfg);

  rep.mapped = map_archive(archive, curve, init.s);
  rep.t_overlap = std::min(opts.t_max, rep.trace.t_end());
  for (int i = 1; i <= opts.output_count; ++i) {
    rep.times.push_back(rep.t_overlap * i / opts.output_count);
  }
  rep.exterior = run_exterior(init, rep.trace, rep.times, {}, cfg);
  for (const auto& st : rep.exterior.outputs) {
    if (st.t == 0.0) continue;
    for (std::size_t j = 0; j < st.size(); ++j) {
      const double mk = rep.mapped.at(rep.mapped.kappa, st.t, j);
      if (!std::isfinite(mk)) continue;
      auto upd = [](double& acc, double x, double y) { acc = std::max(acc, std::abs(x - y)); };
      upd(rep.discrepancy.kappa, st.kappa[j], mk);
      upd(rep.discrepancy.beta, st.beta[j], rep.mapped.at(rep.mapped.beta, st.t, j));
      upd(rep.discrepancy.theta, st.theta[j], rep.mapped.at(rep.mapped.theta, st.t, j));
      upd(rep.discrepancy.zeta, st.zeta[j], rep.mapped.at(rep.mapped.zeta, st.t, j));
      ++rep.compared;
    }
  }
  return rep;
}

}  // namespace nullcollapse::exterior
