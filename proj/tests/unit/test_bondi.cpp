#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "nullcollapse/bondi.hpp"
#include "nullcollapse/errors.hpp"
#include "nullcollapse/initial_data.hpp"

using namespace nullcollapse;
using namespace nullcollapse::bondi;

namespace {

RunConfig flat_config() {
  RunConfig c;
  c.resolution = 128;
  c.u_start = -2.0;
  c.u_max = -0.5;
  c.stop_on_dispersal = false;
  return c;
}

SliceState slice_of(const BVFunction& theta, int n, CenterModel center) {
  RunConfig c;
  c.resolution = n;
  c.center = center;
  auto s = initial_slice(theta, c);
  integrate_hypersurface(s, c.hypersurface());
  return s;
}

}  // namespace

TEST_CASE("vacuum slice is flat") {
  auto s = slice_of(BVFunction::constant(Domain::r_half_line, 0.0), 64, CenterModel::regular);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s.m[i] == 0.0);
    CHECK(s.lambda[i] == 0.0);
    CHECK(s.nu[i] == 0.0);
    CHECK(s.zeta[i] == 0.0);
  }
}

TEST_CASE("constant theta reproduces the closed-form mass ratio") {
  for (double c : {0.1, 0.5, 2.0}) {
    auto s = slice_of(BVFunction::constant(Domain::r_half_line, c), 200, CenterModel::scale_invariant);
    const double mu = c * c / (1.0 + c * c);
    for (std::size_t i = 0; i < s.size(); i += 17) {
      CHECK(s.mu(i) == doctest::Approx(mu).epsilon(1e-12));
      CHECK(s.m[i] == doctest::Approx(c * c * s.r[i] / (2.0 * (1.0 + c * c))).epsilon(1e-12));
      CHECK(s.lambda[i] == doctest::Approx(0.5 * std::log1p(c * c)).epsilon(1e-12));
    }
    // never a horizon, however large c is
    CHECK(mu < 1.0);
  }
}

TEST_CASE("hypersurface pass reports a horizon where mu crosses the cap") {
  auto s = slice_of(annular_bump(Domain::r_half_line, 20.0, 0.4, 0.5), 256, CenterModel::regular);
  HypersurfaceOptions opts;
  const auto st = integrate_hypersurface(s, opts);
  REQUIRE(st.horizon);
  CHECK(s.mu(st.index) >= 1.0 - opts.horizon_epsilon);
  CHECK(s.r[st.index] > 0.4);
  CHECK(std::isnan(s.m.back()));
}

TEST_CASE("flat data stays flat and the run disperses") {
  auto c = flat_config();
  const auto res = run(BVFunction::constant(Domain::r_half_line, 0.0), c);
  CHECK(res.report.outcome != Outcome::horizon);
  for (const auto& s : res.archive) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(std::abs(s.m[i]) <= 1e-10);
      CHECK(std::abs(s.nu[i]) <= 1e-10);
    }
  }
  c.stop_on_dispersal = true;
  CHECK(run(BVFunction::constant(Domain::r_half_line, 0.0), c).report.outcome == Outcome::dispersal);
}

TEST_CASE("flat archive: incoming curves have dr/du = -1/2") {
  const auto res = run(BVFunction::constant(Domain::r_half_line, 0.0), flat_config());
  for (double r0 : {0.9, 0.6171}) {
    const auto tr = extract_incoming_curve(res.archive, -2.0, r0);
    REQUIRE(tr.samples.size() > 3);
    for (const auto& p : tr.samples) {
      CHECK(p.r == doctest::Approx(r0 - (p.u + 2.0) / 2.0).epsilon(1e-12));
      CHECK(p.u_null == doctest::Approx(-2.0 * p.r).epsilon(1e-12));
    }
  }
  CHECK_THROWS(extract_incoming_curve(res.archive, -2.0, 5.0));
}

TEST_CASE("run configuration is validated") {
  RunConfig c;
  c.resolution = 4;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = RunConfig{};
  c.u_max = c.u_start;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(run(BVFunction::constant(Domain::s_line, 0.0), RunConfig{}), DomainMismatch);
}

TEST_CASE("strong pulse forms a horizon, weak pulse disperses") {
  RunConfig c;
  c.resolution = 256;
  c.u_max = 2.0;
  const auto strong = run(annular_bump(Domain::r_half_line, 3.0, 0.4, 0.5), c);
  CHECK(strong.report.outcome == Outcome::horizon);
  CHECK(strong.report.r > 0.0);
  CHECK(strong.report.m == doctest::Approx(strong.report.mu * strong.report.r / 2.0));
  const auto weak = run(annular_bump(Domain::r_half_line, 0.3, 0.4, 0.5), c);
  CHECK(weak.report.outcome == Outcome::dispersal);
}

TEST_CASE("mass is nondecreasing in r and along incoming curves on a smooth run") {
  RunConfig c;
  c.resolution = 256;
  c.u_max = 0.8;
  c.stop_on_dispersal = false;
  const auto res = run(gaussian_pulse(Domain::r_half_line, 0.3, 0.5, 0.1, 1.0), c);
  for (const auto& s : res.archive) {
    for (std::size_t i = 1; i < s.size(); ++i) CHECK(s.m[i] >= s.m[i - 1] - 1e-12);
  }
  const auto tr = extract_incoming_curve(res.archive, 0.0, 0.75);
  for (std::size_t k = 1; k < tr.samples.size(); ++k) {
    CHECK(tr.samples[k].m <= tr.samples[k - 1].m + 1e-7);
    CHECK(tr.samples[k].r < tr.samples[k - 1].r);
  }
  for (const auto& s : res.archive) {
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(s.kappa(i) >= 1.0);
  }
}

TEST_CASE("smooth pulse converges at second order") {
  const auto data = gaussian_pulse(Domain::r_half_line, 0.3, 0.5, 0.1, 1.0);
  std::vector<double> m, th;
  for (int n : {128, 256, 512}) {
    RunConfig c;
    c.resolution = n;
    c.u_max = 0.6;
    c.regrid_fraction = 0;
    c.stop_on_dispersal = false;
    const auto res = run(data, c);
    const auto& s = res.archive.back();
    const double label = 0.75 * n - 1;
    const auto it = std::find(s.label.begin(), s.label.end(), label);
    REQUIRE(it != s.label.end());
    const auto i = static_cast<std::size_t>(it - s.label.begin());
    m.push_back(s.m[i]);
    th.push_back(s.theta[i]);
  }
  const double order_m = std::log2(std::abs((m[1] - m[0]) / (m[2] - m[1])));
  const double order_t = std::log2(std::abs((th[1] - th[0]) / (th[2] - th[1])));
  CHECK(order_m > 1.7);
  CHECK(order_t > 1.7);
}
