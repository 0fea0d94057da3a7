#include "equiflow/numerics.hpp"

#include <algorithm>
#include <stdexcept>

namespace equiflow {

namespace {

template <class T>
void diff_impl(std::span<const double> p, std::span<const T> f, bool periodic, double period,
               std::vector<T>& d1, std::vector<T>& d2) {
  const std::size_t n = p.size();
  if (f.size() != n) throw std::invalid_argument("differentiate: size mismatch");
  if (n < 3) throw std::invalid_argument("differentiate: need at least 3 nodes");
  d1.assign(n, T{});
  d2.assign(n, T{});

  auto interior = [&](std::size_t j, double hm, double hp, const T& fm, const T& f0, const T& fp) {
    const T up = (fp - f0) / hp;
    const T um = (f0 - fm) / hm;
    d1[j] = (hm * up + hp * um) / (hm + hp);
    d2[j] = 2.0 * (up - um) / (hm + hp);
  };

  for (std::size_t j = 1; j + 1 < n; ++j)
    interior(j, p[j] - p[j - 1], p[j + 1] - p[j], f[j - 1], f[j], f[j + 1]);

  if (periodic) {
    interior(0, p[0] - (p[n - 1] - period), p[1] - p[0], f[n - 1], f[0], f[1]);
    interior(n - 1, p[n - 1] - p[n - 2], (p[0] + period) - p[n - 1], f[n - 2], f[n - 1], f[0]);
    return;
  }

  // One-sided three-point stencils; the second derivative is first order here.
  {
    const double h1 = p[1] - p[0], h2 = p[2] - p[1];
    const T s1 = (f[1] - f[0]) / h1, s2 = (f[2] - f[1]) / h2;
    d2[0] = 2.0 * (s2 - s1) / (h1 + h2);
    d1[0] = s1 - d2[0] * (h1 / 2.0);
  }
  {
    const double h1 = p[n - 2] - p[n - 3], h2 = p[n - 1] - p[n - 2];
    const T s1 = (f[n - 2] - f[n - 3]) / h1, s2 = (f[n - 1] - f[n - 2]) / h2;
    d2[n - 1] = 2.0 * (s2 - s1) / (h1 + h2);
    d1[n - 1] = s2 + d2[n - 1] * (h2 / 2.0);
  }
}

}  // namespace

Derivatives differentiate(std::span<const double> p, std::span<const double> f, bool periodic,
                          double period) {
  Derivatives out;
  diff_impl<double>(p, f, periodic, period, out.d1, out.d2);
  return out;
}

ComplexDerivatives differentiate(std::span<const double> p, std::span<const cplx> f,
                                 bool periodic, double period) {
  ComplexDerivatives out;
  diff_impl<cplx>(p, f, periodic, period, out.d1, out.d2);
  return out;
}

double trapezoid(std::span<const double> p, std::span<const double> f, bool periodic,
                 double period) {
  const std::size_t n = p.size();
  double s = 0.0;
  for (std::size_t j = 0; j + 1 < n; ++j) s += 0.5 * (p[j + 1] - p[j]) * (f[j] + f[j + 1]);
  if (periodic && n > 0) s += 0.5 * (p[0] + period - p[n - 1]) * (f[n - 1] + f[0]);
  return s;
}

std::vector<double> cumulative_trapezoid(std::span<const double> p, std::span<const double> f) {
  std::vector<double> out(p.size(), 0.0);
  for (std::size_t j = 1; j < p.size(); ++j)
    out[j] = out[j - 1] + 0.5 * (p[j] - p[j - 1]) * (f[j] + f[j - 1]);
  return out;
}

std::size_t bracket(std::span<const double> p, double x) {
  const std::size_t n = p.size();
  if (n < 2) throw std::invalid_argument("bracket: need at least 2 nodes");
  auto it = std::upper_bound(p.begin(), p.end(), x);
  std::size_t j = it == p.begin() ? 0 : static_cast<std::size_t>(it - p.begin()) - 1;
  return std::min(j, n - 2);
}

double lagrange4(std::span<const double> p, std::span<const double> f, double x) {
  const std::size_t n = p.size();
  if (n < 2) throw std::invalid_argument("lagrange4: need at least 2 nodes");
  if (n < 4) {
    const std::size_t j = bracket(p, x);
    const double w = (x - p[j]) / (p[j + 1] - p[j]);
    return (1.0 - w) * f[j] + w * f[j + 1];
  }
  const std::size_t j = bracket(p, x);
  std::size_t lo = j == 0 ? 0 : j - 1;
  if (lo + 3 >= n) lo = n - 4;
  double sum = 0.0;
  for (std::size_t a = lo; a < lo + 4; ++a) {
    double w = 1.0;
    for (std::size_t b = lo; b < lo + 4; ++b)
      if (b != a) w *= (x - p[b]) / (p[a] - p[b]);
    sum += w * f[a];
  }
  return sum;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw std::invalid_argument("fit_line: need >= 2 paired samples");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  for (std::size_t i = 0; i < n; ++i)
    fit.max_abs_residual =
        std::max(fit.max_abs_residual, std::abs(y[i] - fit.intercept - fit.slope * x[i]));
  return fit;
}

}  // namespace equiflow
