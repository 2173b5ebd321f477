#include <cmath>
#include <functional>

#include "doctest.h"
#include "nullcollapse/diagnostics.hpp"
#include "nullcollapse/errors.hpp"
#include "nullcollapse/exterior.hpp"
#include "nullcollapse/initial_data.hpp"

using namespace nullcollapse;
using namespace nullcollapse::diagnostics;
using exterior::manufactured_trace;

namespace {

using Fn = std::function<double(double)>;

exterior::BoundaryTrace linear_gamma(const Fn& I, const Fn& dI, double theta0, double t_end = 200.0) {
  return manufactured_trace([](double t) { return t; }, [](double) { return 1.0; }, I, dI, theta0, t_end, 0.01);
}

exterior::BoundaryTrace converging_I(double theta0) {
  return linear_gamma([](double t) { return 1.0 - std::exp(-t); }, [](double t) { return std::exp(-t); }, theta0);
}

}  // namespace

TEST_CASE("verdict and limit strings") {
  for (auto v : {Verdict::generic_thm21, Verdict::generic_thm31, Verdict::exceptional_candidate,
                 Verdict::gamma_bounded, Verdict::undecided}) {
    CHECK(verdict_from_string(to_string(v)) == v);
  }
  CHECK(to_string(LimitKind::plus_infinity) == "+inf");
  CHECK_THROWS(verdict_from_string("maybe"));
}

TEST_CASE("estimate constants") {
  EstimateConstants c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.c2() == doctest::Approx(16.0 * std::exp(1.0)));
  CHECK(c.c3() == doctest::Approx(9.5 * (std::exp(1.0) - 2.0)));
  CHECK(c.collapse_threshold(0.2) == doctest::Approx(0.2 * std::log(5.0)));
  c.c1 = 0.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.c1 = 1.0;
  c.c0 = 0.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("case assignment does not depend on the amplitude of the trace") {
  // I = k (1 - e^{-t}) settles; I = k t^{1/4} keeps drifting without a finite limit
  for (double k : {1.0, 1e-4}) {
    CAPTURE(k);
    const auto settled =
        linear_gamma([k](double t) { return k * (1.0 - std::exp(-t)); }, [k](double t) { return k * std::exp(-t); }, 2.0 * k);
    CHECK(classify(settled, 2.0 * k).case_id == 1);
    const auto drifting = linear_gamma([k](double t) { return k * std::pow(t, 0.25); },
                                       [k](double t) { return 0.25 * k * std::pow(std::max(t, 1e-12), -0.75); }, 2.0 * k);
    CHECK(classify(drifting, 2.0 * k).case_id != 1);
  }
}

TEST_CASE("case 1 with theta0(0) away from the limit is generic") {
  const auto v = classify(converging_I(2.0), 2.0);
  CHECK(v.case_id == 1);
  CHECK(v.verdict == Verdict::generic_thm21);
  CHECK(v.lower.value == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(v.upper.value == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_FALSE(v.theorem31_applied);
}

TEST_CASE("case 1 with theta0(0) at the limit defers to the h/g test") {
  const auto tr = converging_I(1.0);
  const auto bare = classify(tr, 1.0);
  CHECK(bare.case_id == 1);
  CHECK(bare.verdict == Verdict::undecided);

  // e^s vartheta(s) = vartheta(0): the ratio vanishes identically
  const auto flat = default_f1(30.0, 0.02);
  const auto v = classify(tr, 1.0, {}, &flat);
  CHECK(v.theorem31_applied);
  CHECK(v.verdict == Verdict::exceptional_candidate);
}

TEST_CASE("oscillating I with finite distinct limits is case 4") {
  const auto tr = linear_gamma([](double t) { return 1.0 + 0.5 * std::sin(t); },
                               [](double t) { return 0.5 * std::cos(t); }, 1.0);
  const auto v = classify(tr, 1.0);
  CHECK(v.case_id == 4);
  CHECK(v.verdict == Verdict::generic_thm21);
  CHECK(v.lower.value == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(v.upper.value == doctest::Approx(1.5).epsilon(1e-4));
}

TEST_CASE("divergent limits") {
  const auto up = classify(linear_gamma([](double t) { return t; }, [](double) { return 1.0; }, 0.5), 0.5);
  CHECK(up.case_id == 2);
  const auto down = classify(linear_gamma([](double t) { return -t; }, [](double) { return -1.0; }, 0.5), 0.5);
  CHECK(down.case_id == 3);
  const auto both = classify(
      linear_gamma([](double t) { return t * std::sin(t); }, [](double t) { return std::sin(t) + t * std::cos(t); }, 0.5),
      0.5);
  CHECK(both.case_id == 7);
  CHECK(both.lower.kind == LimitKind::minus_infinity);
  CHECK(both.upper.kind == LimitKind::plus_infinity);
  for (const auto& v : {up, down, both}) CHECK(v.verdict == Verdict::generic_thm21);
}

TEST_CASE("short and bounded-gamma traces") {
  const auto short_tr = linear_gamma([](double t) { return t; }, [](double) { return 1.0; }, 0.5, 1.0);
  const auto v = classify(short_tr, 0.5);
  CHECK(v.verdict == Verdict::undecided);
  CHECK_FALSE(v.reason.empty());

  const auto flat = exterior::boundary_evolve(1.0, 0.2, [](double) { return 0.0; }, 50.0, {0.01});
  CHECK(classify(flat, 0.2).verdict == Verdict::gamma_bounded);
}

TEST_CASE("g for linear gamma is s^(1/24)") {
  const auto tr = converging_I(1.0);
  std::vector<double> s, g;
  g_table(tr, s, g);
  REQUIRE(s.size() > 10);
  CHECK(s.back() <= 1.0);
  CHECK(std::log(s.front()) >= -690.0);
  for (std::size_t k = 0; k < s.size(); k += s.size() / 10) {
    CHECK(g[k] == doctest::Approx(std::pow(s[k], 1.0 / 24.0)).epsilon(1e-9));
    if (k > 0) CHECK(s[k] > s[k - 1]);
  }
}

TEST_CASE("h for constant vartheta is c s / sqrt 3 near zero") {
  const double c = 0.8;
  const auto vt = BVFunction::constant(Domain::s_line, c);
  const auto hg = h_and_g(vt, converging_I(1.0));
  REQUIRE(hg.ok);
  for (std::size_t k = 0; k < hg.s.size(); k += hg.s.size() / 8) {
    if (hg.s[k] > 1e-3) continue;
    CHECK(hg.h[k] == doctest::Approx(c * hg.s[k] / std::sqrt(3.0)).epsilon(1e-3));
  }
}

TEST_CASE("a slowly vanishing vartheta jump gives a diverging ratio") {
  std::vector<double> x{0.0}, y{0.4};
  for (int k = 0; k <= 3000; ++k) {
    x.push_back(std::pow(10.0, -300.0 + 0.1 * k));
    y.push_back(0.4 * std::exp(-x.back()) + std::pow(x.back(), 1.0 / 96.0));
  }
  const auto vt = BVFunction::from_samples(Domain::s_line, x, y);
  const auto hg = h_and_g(vt, converging_I(1.0));
  REQUIRE(hg.ok);
  const auto out = theorem31_test(hg);
  CHECK(out.verdict == Verdict::generic_thm31);
  CHECK(out.min_growth >= 1.01);
  CHECK(out.decades >= 8);
}

TEST_CASE("bounded ratio is an exceptional candidate") {
  // h ~ c s/sqrt 3, much smaller than g
  const auto hg = h_and_g(BVFunction::constant(Domain::s_line, 0.8), converging_I(1.0));
  CHECK(theorem31_test(hg).verdict == Verdict::exceptional_candidate);
}

TEST_CASE("flat psi fields") {
  exterior::ExteriorConfig cfg;
  cfg.s_max = 2.0;
  const auto st = exterior::initial_state([](double) { return 0.0; }, {1.0, 0.0, 0.0}, cfg);
  const auto tr = exterior::boundary_evolve(1.0, 0.0, [](double) { return 0.0; }, 1.0);
  const auto p = psi_fields(st, tr);
  for (std::size_t j = 0; j < st.size(); ++j) {
    CHECK(p.psi[j] == 0.0);
    CHECK(p.rho[j] == 0.0);
    CHECK(p.omega[j] == doctest::Approx(st.beta[j]));
  }
}

TEST_CASE("psi vanishes on the boundary for any state") {
  exterior::ExteriorConfig cfg;
  const auto tr = exterior::boundary_evolve(1.2, 0.3, [](double) { return -0.1; }, 1.0);
  const auto st = exterior::initial_state([](double s) { return 0.3 + s * s; }, tr.at(0.0), cfg);
  CHECK(psi_fields(st, tr).psi[0] == doctest::Approx(0.0));
}

TEST_CASE("flat decomposition and Jacobian") {
  exterior::ExteriorConfig cfg;
  cfg.s_max = 3.0;
  cfg.points = 301;
  const auto tr = exterior::boundary_evolve(1.0, 0.0, [](double) { return 0.0; }, 1.2);
  const auto st = exterior::initial_state([](double) { return 0.0; }, {1.0, 0.0, 0.0}, cfg);
  std::vector<double> outs{0.25, 0.5, 0.75, 1.0};
  const double d = 4.0 * cfg.ds();
  const auto run = exterior::run_exterior(st, tr, outs, {0.3 - d, 0.3, 0.3 + d}, cfg);
  const auto dec = decomposition(run.characteristics[1], tr);
  CHECK(dec.drift() == 0.0);
  CHECK(dec.sigma.front() == 0.0);
  CHECK(dec.tau.front() == 0.0);
  for (std::size_t k = 1; k < dec.tau.size(); ++k) CHECK(dec.tau[k] > dec.tau[k - 1]);  // omega = beta > 0
  const auto jc = jacobian_check(run.characteristics[0], run.characteristics[1], run.characteristics[2], tr);
  CHECK(jc.passed());
  CHECK(jc.max_violation < 1e-3);
}

TEST_CASE("a priori bounds hold on closed-form traces") {
  for (const auto& tr : {exterior::boundary_evolve(1.0, 0.1, [](double) { return 0.0; }, 5.0),
                         exterior::boundary_evolve(2.0, 1.0, [](double) { return -1.0; }, 5.0),
                         exterior::boundary_evolve(2.0, 0.0, [](double) { return 0.0; }, 1.0)}) {
    const auto entries = lemma_checks(tr);
    REQUIRE(entries.size() == 2);
    for (const auto& e : entries) CHECK_MESSAGE(e.passed(), e.name);
  }
}

TEST_CASE("bound check flags a kappa0 that outgrows its bound") {
  exterior::BoundaryTrace tr;
  for (int k = 0; k <= 100; ++k) {
    const double t = 0.1 * k;
    tr.t.push_back(t);
    tr.kappa0.push_back(1.0 + 2.0 * t);
    tr.theta0.push_back(0.0);
    tr.zeta0.push_back(0.0);
  }
  exterior::accumulate(tr);
  // gamma = t^2, kappa0 bound 2 e^{t^2} holds; force a violation by hand
  tr.kappa0[50] = 1e12;
  const auto entries = lemma_checks(tr);
  CHECK_FALSE(entries[0].passed());
  CHECK(entries[0].location == doctest::Approx(5.0));
}

TEST_CASE("eta bound on a flat state") {
  exterior::ExteriorConfig cfg;
  const auto st = exterior::initial_state([](double) { return 0.0; }, {1.0, 0.0, 0.0}, cfg);
  const auto tr = exterior::boundary_evolve(1.0, 0.0, [](double) { return 0.0; }, 1.0);
  double c1 = -1.0;
  const auto e = eta_bound_check(st, tr, {}, &c1);
  CHECK(e.passed());
  CHECK(c1 == doctest::Approx(0.0));
}

TEST_CASE("curvature of flat and constant-theta slices") {
  bondi::RunConfig c;
  c.resolution = 100;
  auto flat = bondi::initial_slice(BVFunction::constant(Domain::r_half_line, 0.0), c);
  bondi::integrate_hypersurface(flat, c.hypersurface());
  for (double k : gauss_curvature(flat).K) CHECK(k == 0.0);

  // zeta = -1/theta and exp(-2 lambda) = 1/(1 + theta^2)
  const double th = 0.5;
  c.center = bondi::CenterModel::scale_invariant;
  auto s = bondi::initial_slice(BVFunction::constant(Domain::r_half_line, th), c);
  bondi::integrate_hypersurface(s, c.hypersurface());
  const auto K = gauss_curvature(s);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s.zeta[i] == doctest::Approx(-1.0 / th).epsilon(1e-12));
    const double expect = (th * th - 1.0) / ((1.0 + th * th) * s.r[i] * s.r[i]);
    CHECK(K.K[i] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("mass monotonicity checks") {
  bondi::RunConfig c;
  c.resolution = 64;
  c.u_max = 0.5;
  c.stop_on_dispersal = false;
  const auto res = bondi::run(gaussian_pulse(Domain::r_half_line, 0.3, 0.5, 0.1, 1.0), c);
  CHECK(mass_monotonicity_in_r(res.archive).passed());
  CHECK(kappa_at_least_one(res.archive).passed());
  const auto curve = bondi::extract_incoming_curve(res.archive, 0.0, 0.75);
  CHECK(mass_monotonicity_along(curve).passed());

  auto bad = res.archive;
  bad.back().m[bad.back().size() / 2] += 0.1;
  CHECK_FALSE(mass_monotonicity_in_r(bad).passed());
}

TEST_CASE("verdict json carries the case and reason") {
  const auto j = to_json(classify(converging_I(2.0), 2.0));
  CHECK(j.find("\"case\"") != std::string::npos);
  CHECK(j.find("generic-thm21") != std::string::npos);
}
