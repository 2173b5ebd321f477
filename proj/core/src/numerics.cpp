#include "nullcollapse/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "nullcollapse/errors.hpp"

namespace nullcollapse::numerics {

std::vector<double> cumulative_trapezoid(std::span<const double> x, std::span<const double> y,
                                         double initial) {
  if (x.size() != y.size()) throw MalformedData("cumulative_trapezoid: size mismatch");
  std::vector<double> out(x.size(), initial);
  for (std::size_t i = 1; i < x.size(); ++i) {
    out[i] = out[i - 1] + 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  }
  return out;
}

double trapezoid(std::span<const double> x, std::span<const double> y) {
  if (x.size() < 2) return 0.0;
  return cumulative_trapezoid(x, y).back();
}

std::size_t locate(std::span<const double> x, double v) {
  if (x.size() < 2) return 0;
  auto it = std::upper_bound(x.begin(), x.end(), v);
  std::size_t k = it == x.begin() ? 0 : static_cast<std::size_t>(it - x.begin()) - 1;
  return std::min(k, x.size() - 2);
}

double linear_interp(std::span<const double> x, std::span<const double> y, double v) {
  if (x.size() == 1) return y[0];
  const std::size_t k = locate(x, v);
  const double w = (v - x[k]) / (x[k + 1] - x[k]);
  return y[k] + w * (y[k + 1] - y[k]);
}

double lagrange4(std::span<const double> x, std::span<const double> y, double v) {
  const std::size_t n = x.size();
  if (n == 1) return y[0];
  if (n < 4) return linear_interp(x, y, v);
  const std::size_t k = locate(x, v);
  std::size_t lo = k == 0 ? 0 : k - 1;
  if (lo + 4 > n) lo = n - 4;
  double sum = 0.0;
  for (std::size_t i = lo; i < lo + 4; ++i) {
    double w = 1.0;
    for (std::size_t j = lo; j < lo + 4; ++j) {
      if (j != i) w *= (v - x[j]) / (x[i] - x[j]);
    }
    sum += w * y[i];
  }
  return sum;
}

Pchip::Pchip(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n != y_.size() || n < 2) throw MalformedData("Pchip: need at least two matching samples");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(x_[i] > x_[i - 1])) throw MalformedData("Pchip: abscissae must be strictly increasing");
  }
  std::vector<double> h(n - 1), delta(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = x_[i + 1] - x_[i];
    delta[i] = (y_[i + 1] - y_[i]) / h[i];
  }
  d_.assign(n, 0.0);
  if (n == 2) {
    d_[0] = d_[1] = delta[0];
    return;
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (delta[i - 1] * delta[i] <= 0.0) {
      d_[i] = 0.0;
    } else {
      const double w1 = 2.0 * h[i] + h[i - 1];
      const double w2 = h[i] + 2.0 * h[i - 1];
      d_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
    }
  }
  // Three-point one-sided end slopes, limited to preserve shape.
  auto end_slope = [](double h0, double h1, double d0, double d1) {
    double d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (d * d0 <= 0.0) {
      d = 0.0;
    } else if (d0 * d1 <= 0.0 && std::abs(d) > std::abs(3.0 * d0)) {
      d = 3.0 * d0;
    }
    return d;
  };
  d_[0] = end_slope(h[0], h[1], delta[0], delta[1]);
  d_[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
}

double Pchip::operator()(double v) const {
  const std::size_t n = x_.size();
  if (v <= x_[0]) return y_[0] + d_[0] * (v - x_[0]);
  if (v >= x_[n - 1]) return y_[n - 1] + d_[n - 1] * (v - x_[n - 1]);
  const std::size_t k = locate(x_, v);
  const double h = x_[k + 1] - x_[k];
  const double t = (v - x_[k]) / h;
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  return h00 * y_[k] + h10 * h * d_[k] + h01 * y_[k + 1] + h11 * h * d_[k + 1];
}

double Pchip::derivative(double v) const {
  const std::size_t n = x_.size();
  if (v <= x_[0]) return d_[0];
  if (v >= x_[n - 1]) return d_[n - 1];
  const std::size_t k = locate(x_, v);
  const double h = x_[k + 1] - x_[k];
  const double t = (v - x_[k]) / h;
  const double t2 = t * t;
  const double dh00 = (6 * t2 - 6 * t) / h, dh10 = 3 * t2 - 4 * t + 1;
  const double dh01 = (-6 * t2 + 6 * t) / h, dh11 = 3 * t2 - 2 * t;
  return dh00 * y_[k] + dh10 * d_[k] + dh01 * y_[k + 1] + dh11 * d_[k + 1];
}

double gauss_legendre(const std::function<double(double)>& f, double a, double b) {
  // 7-point rule.
  static constexpr std::array<double, 7> nodes = {
      0.0, 0.4058451513773971669, -0.4058451513773971669, 0.7415311855993944399,
      -0.7415311855993944399, 0.9491079123427585245, -0.9491079123427585245};
  static constexpr std::array<double, 7> weights = {
      0.4179591836734693878, 0.3818300505051189449, 0.3818300505051189449,
      0.2797053914892766679, 0.2797053914892766679, 0.1294849661688696933,
      0.1294849661688696933};
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double sum = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) sum += weights[i] * f(mid + half * nodes[i]);
  return sum * half;
}

double richardson_order(double coarse_diff, double fine_diff, double refinement) {
  return std::log(std::abs(coarse_diff) / std::abs(fine_diff)) / std::log(refinement);
}

}  // namespace nullcollapse::numerics
