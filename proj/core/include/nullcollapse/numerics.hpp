#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace nullcollapse::numerics {

// Cumulative trapezoidal integral of y over x, starting at `initial`.
std::vector<double> cumulative_trapezoid(std::span<const double> x, std::span<const double> y,
                                         double initial = 0.0);

double trapezoid(std::span<const double> x, std::span<const double> y);

// Index k with x[k] <= v < x[k+1], clamped to [0, n-2]. x must be increasing.
std::size_t locate(std::span<const double> x, double v);

double linear_interp(std::span<const double> x, std::span<const double> y, double v);

/// Shape-preserving monotone cubic Hermite interpolant (Fritsch-Carlson).
///
/// Abscissae must be strictly increasing. Outside the table the end
/// intervals are extrapolated linearly with the end slopes, which is the
/// outflow closure the exterior stepper relies on.
class Pchip {
 public:
  Pchip() = default;
  Pchip(std::vector<double> x, std::vector<double> y);

  double operator()(double v) const;
  double derivative(double v) const;

  bool empty() const { return x_.empty(); }
  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }

 private:
  std::vector<double> x_, y_, d_;
};

// Four-point Lagrange interpolation around v (stencil shifted inward at the ends).
double lagrange4(std::span<const double> x, std::span<const double> y, double v);

// Fixed-order Gauss-Legendre rule on [a, b].
double gauss_legendre(const std::function<double(double)>& f, double a, double b);

// Richardson order estimate from three successive errors/differences.
double richardson_order(double coarse_diff, double fine_diff, double refinement = 2.0);

}  // namespace nullcollapse::numerics
