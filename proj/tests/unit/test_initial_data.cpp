#include <cmath>
#include <sstream>

#include "doctest.h"
#include "nullcollapse/errors.hpp"
#include "nullcollapse/initial_data.hpp"
#include "nullcollapse/numerics.hpp"

using namespace nullcollapse;

namespace {

BVFunction hat() {
  return BVFunction::from_samples(Domain::s_line, {0.0, 1.0, 2.0}, {0.0, 1.0, 0.0});
}

}  // namespace

TEST_CASE("total variation of simple shapes") {
  CHECK(total_variation(BVFunction::constant(Domain::s_line, 3.0)) == 0.0);
  CHECK(total_variation(BVFunction::step(Domain::s_line, 0.0, 0.0, 1.0)) == doctest::Approx(1.0));
  CHECK(total_variation(hat()) == doctest::Approx(2.0));
}

TEST_CASE("evaluation is right-continuous at jumps") {
  const auto f = BVFunction::step(Domain::s_line, 0.5, -1.0, 2.0);
  CHECK(f(0.5) == 2.0);
  CHECK(f.left_limit(0.5) == -1.0);
  CHECK(f(0.4999) == -1.0);
}

TEST_CASE("malformed breakpoints are rejected") {
  CHECK_THROWS_AS(BVFunction::from_samples(Domain::s_line, {0.0, 0.0}, {1.0, 2.0}), MalformedData);
  CHECK_THROWS_AS(BVFunction::from_samples(Domain::s_line, {1.0, 0.0}, {1.0, 2.0}), MalformedData);
}

TEST_CASE("phi from alpha") {
  SUBCASE("constant alpha gives constant phi and vanishing theta") {
    const auto p = phi_from_alpha(BVFunction::constant(Domain::r_half_line, 0.7));
    for (double r : {0.01, 0.3, 2.0}) {
      CHECK(p.phi(r) == doctest::Approx(0.7).epsilon(1e-12));
      CHECK(std::abs(p.theta(r)) < 1e-12);
    }
  }
  SUBCASE("alpha = r gives phi = theta = r/2") {
    const auto alpha = BVFunction::from_samples(Domain::r_half_line, {0.0, 1.0, 1.0 + 1e-9}, {0.0, 1.0, 1.0});
    const auto p = phi_from_alpha(alpha);
    for (double r : {0.1, 0.5, 0.9}) {
      CHECK(p.phi(r) == doctest::Approx(r / 2).epsilon(1e-9));
      CHECK(p.theta(r) == doctest::Approx(r / 2).epsilon(1e-9));
    }
  }
  SUBCASE("vanishing theta inverts to a constant alpha") {
    const auto a = alpha_from_theta(BVFunction::constant(Domain::r_half_line, 0.0), 0.4);
    for (double r : {0.05, 0.5, 3.0}) CHECK(a(r) == doctest::Approx(0.4));
  }
  SUBCASE("domain mismatch") {
    CHECK_THROWS_AS(phi_from_alpha(BVFunction::constant(Domain::s_line, 1.0)), DomainMismatch);
  }
}

TEST_CASE("alpha to phi and back reproduces alpha") {
  const auto alpha = gaussian_pulse(Domain::r_half_line, 0.4, 0.5, 0.1, 1.0, 801);
  const auto p = phi_from_alpha(alpha, 32);
  for (double r : {0.2, 0.45, 0.5, 0.63, 0.9}) {
    CHECK(p.theta(r) + p.phi(r) == doctest::Approx(alpha(r)).epsilon(1e-4));
  }
}

TEST_CASE("f2 from a power-law g") {
  std::vector<double> s, g;
  for (int k = 0; k <= 200; ++k) {
    s.push_back(std::pow(10.0, -20.0 + 0.1 * k));
    g.push_back(std::pow(s.back(), 1.0 / 24.0));
  }
  const auto f2 = build_f2(s, g);
  for (double x : {1e-15, 1e-8, 1e-3, 0.3}) {
    const double expect = std::exp(-x) * std::sqrt(25.0 / 24.0) * std::pow(x, 1.0 / 48.0);
    CHECK(f2(x) == doctest::Approx(expect).epsilon(1e-3));
  }
  CHECK(f2(-0.5) == 0.0);
  CHECK(f2(1.5) == 0.0);

  // (1/s) int_0^s e^{2s'} f2^2 ds' recovers g.
  const double x = 1e-2;
  const double integral = numerics::gauss_legendre(
      [&](double y) { return std::exp(2.0 * y) * f2(y) * f2(y); }, 0.0, x);
  CHECK(integral / x == doctest::Approx(std::pow(x, 1.0 / 24.0)).epsilon(2e-2));
}

TEST_CASE("f2 from a constant g and a degenerate g") {
  std::vector<double> s{0.1, 0.2, 0.4, 0.8}, c(4, 2.0);
  const auto f2 = build_f2(s, c);
  CHECK(f2(0.2) == doctest::Approx(std::exp(-0.2) * std::sqrt(2.0)));

  std::vector<double> inv;
  for (double x : s) inv.push_back(1.0 / x);
  try {
    build_f2(s, inv);
    FAIL("expected a construction error");
  } catch (const ConstructionError& e) {
    CHECK(std::string(e.what()).find("s = 0.1") != std::string::npos);
  }
}

TEST_CASE("perturbation of a datum") {
  const auto base = BVFunction::from_samples(Domain::s_line, {-1.0, 0.0, 2.0}, {0.3, 0.5, 0.1});
  PerturbationBasis basis{default_f1(), build_f2({0.1, 0.2, 0.4, 0.8}, {1.0, 1.0, 1.0, 1.0}), {}};

  const auto same = perturb(base, basis, {0.0, 0.0});
  for (double x : {-2.0, -0.5, 0.3, 1.7}) CHECK(same(x) == doctest::Approx(base(x)));

  const auto up = perturb(base, basis, {1.0, 0.0});
  CHECK(up(0.0) == doctest::Approx(base(0.0) + 1.0));

  const auto any = perturb(base, basis, {-0.7, 2.5});
  for (double x : {-3.0, -1.0, -0.25, -1e-9}) CHECK(any(x) == doctest::Approx(base(x)));

  const double tv = total_variation(any);
  CHECK(tv <= total_variation(base) + 0.7 * total_variation(basis.f1) + 2.5 * total_variation(basis.f2) + 1e-12);

  CHECK_THROWS_AS(perturb(BVFunction::constant(Domain::r_half_line, 1.0), basis, {1.0, 0.0}), DomainMismatch);
}

TEST_CASE("default f1 satisfies its constraints") {
  const auto f1 = default_f1();
  CHECK(f1(-1e-12) == 0.0);
  CHECK(f1(0.0) == doctest::Approx(1.0));
  CHECK(f1(1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-3));
  for (double x : {0.0, 0.5, 5.0, 40.0}) CHECK(f1(x) >= 0.0);
}

TEST_CASE("initial-data file round trip is exact") {
  const auto f = BVFunction::from_nodes(Domain::s_line, {{0.0, 0.1, 0.2}, {0.3, 1.0 / 3.0, -0.7}, {1.0, 0.25, 0.25}});
  std::stringstream ss;
  write_bv_file(ss, f, "dimensionless");
  const auto g = read_bv_file(ss);
  REQUIRE(g.breakpoints().size() == f.breakpoints().size());
  CHECK(g.domain() == f.domain());
  for (std::size_t i = 0; i < f.breakpoints().size(); ++i) {
    CHECK(g.breakpoints()[i].x == f.breakpoints()[i].x);
    CHECK(g.breakpoints()[i].left == f.breakpoints()[i].left);
    CHECK(g.breakpoints()[i].right == f.breakpoints()[i].right);
    CHECK(g.breakpoints()[i].slope == f.breakpoints()[i].slope);
  }
  CHECK_THROWS_AS(read_bv_file(std::string("/nonexistent/theta.bv")), IoError);
}

TEST_CASE("profile builders") {
  const auto g = gaussian_pulse(Domain::r_half_line, 0.3, 0.5, 0.1, 1.0);
  CHECK(g(0.5) == doctest::Approx(0.3).epsilon(1e-6));
  CHECK(g(2.0) == 0.0);
  const auto a = annular_bump(Domain::r_half_line, 2.0, 0.4, 0.5);
  CHECK(a(0.45) == doctest::Approx(2.0).epsilon(1e-5));
  CHECK(a(0.2) == 0.0);
  CHECK(a(0.6) == 0.0);
  CHECK(total_variation(a) == doctest::Approx(4.0).epsilon(1e-4));
}

TEST_CASE("s profile mapped to radius") {
  const auto v = BVFunction::from_samples(Domain::s_line, {0.0, 1.0, 2.0}, {1.0, 0.5, 0.0});
  const auto th = s_profile_to_radius(v, 0.25);
  CHECK(th.domain() == Domain::r_half_line);
  for (double s : {0.0, 0.3, 1.0, 1.5}) CHECK(th(0.25 * std::exp(s)) == doctest::Approx(v(s)).epsilon(1e-3));
}
