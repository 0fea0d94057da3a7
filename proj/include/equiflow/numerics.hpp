#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

namespace equiflow {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;

/// First and second derivatives of nodal data on a (possibly nonuniform)
/// grid using centered three-point stencils. Open grids fall back to
/// one-sided three-point formulas at the two end nodes; periodic grids wrap
/// with the given period added to the parameter.
struct Derivatives {
  std::vector<double> d1;
  std::vector<double> d2;
};

Derivatives differentiate(std::span<const double> p, std::span<const double> f,
                          bool periodic = false, double period = 0.0);

/// Complex-valued variant of differentiate().
struct ComplexDerivatives {
  std::vector<cplx> d1;
  std::vector<cplx> d2;
};

ComplexDerivatives differentiate(std::span<const double> p, std::span<const cplx> f,
                                 bool periodic = false, double period = 0.0);

/// Trapezoid rule on the node grid (closing interval included when periodic).
double trapezoid(std::span<const double> p, std::span<const double> f, bool periodic = false,
                 double period = 0.0);

/// Cumulative trapezoid, starting at 0 on the first node.
std::vector<double> cumulative_trapezoid(std::span<const double> p, std::span<const double> f);

/// Cubic Lagrange interpolation through the four nodes bracketing `x`
/// (three at the ends). `p` must be strictly increasing.
double lagrange4(std::span<const double> p, std::span<const double> f, double x);

/// Index j with p[j] <= x < p[j+1], clamped to [0, n-2].
std::size_t bracket(std::span<const double> p, double x);

/// Wrap an angle into [lo, lo + 2pi).
inline double wrap_angle(double a, double lo) {
  double w = std::fmod(a - lo, 2.0 * pi);
  if (w < 0.0) w += 2.0 * pi;
  return lo + w;
}

/// Least-squares line y = a + b x.
struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double max_abs_residual = 0.0;
};

LineFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace equiflow
