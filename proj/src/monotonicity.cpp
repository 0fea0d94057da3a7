#include "equiflow/monotonicity.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace equiflow {

namespace {

double dot(cplx a, cplx b) { return a.real() * b.real() + a.imag() * b.imag(); }

// Real inner product on C^2.
double dot2(const std::array<cplx, 2>& a, const std::array<cplx, 2>& b) {
  return dot(a[0], b[0]) + dot(a[1], b[1]);
}

void check_kernel(const CurveSnapshot& snap, const KernelSpec& kernel) {
  if (!(kernel.T > snap.t)) throw std::invalid_argument("kernel: need T > t");
}

// Per-node data shared by the kernel integrals.
struct KernelNodes {
  CurveFrame frame;
  std::vector<double> theta;
  VelocityField vel;
  std::vector<double> area_density;  // |gamma| |gamma'|
};

KernelNodes kernel_nodes(const CurveSnapshot& snap) {
  KernelNodes k;
  k.frame = curve_frame(snap);
  k.theta = lagrangian_angle(k.frame);
  k.vel = velocity(k.frame);
  k.area_density.resize(k.frame.size());
  for (std::size_t j = 0; j < k.frame.size(); ++j)
    k.area_density[j] = std::abs(k.frame.z[j]) * std::abs(k.frame.dz[j]);
  return k;
}

// Trapezoid over every `stride`-th node (end node always included).
double strided_trapezoid(const CurveFrame& f, const std::vector<double>& g, std::size_t stride) {
  std::vector<double> p, v;
  const std::size_t n = f.size();
  for (std::size_t j = 0; j < n; j += stride) {
    p.push_back(f.p[j]);
    v.push_back(g[j]);
  }
  if (!f.periodic && (n - 1) % stride != 0) {
    p.push_back(f.p[n - 1]);
    v.push_back(g[n - 1]);
  }
  return trapezoid(p, v, f.periodic, f.period);
}

// Weight of the kernel-integrand at the point (gamma cos a, gamma sin a);
// `integrand(j, a)` returns the factor beyond the kernel and the area density.
using Factor = std::function<double(std::size_t, double)>;

DensityValue kernel_integral(const CurveSnapshot& snap, const KernelSpec& kernel,
                             const KernelNodes& kn, const Factor& factor,
                             const std::function<double(std::size_t)>& end_factor) {
  check_kernel(snap, kernel);
  const double s = kernel.T - snap.t;
  const auto& f = kn.frame;
  const std::size_t n = f.size();
  const double w2 = std::norm(kernel.center[0]) + std::norm(kernel.center[1]);

  auto profile_values = [&](double alpha) {
    const cplx q = std::cos(alpha) * kernel.center[0] + std::sin(alpha) * kernel.center[1];
    std::vector<double> g(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double d2 = std::norm(f.z[j] - q) + w2 - std::norm(q);
      g[j] = std::exp(-d2 / (4.0 * s)) / (4.0 * pi * s) * kn.area_density[j] * factor(j, alpha);
    }
    return g;
  };

  DensityValue out;
  if (kernel.at_origin()) {
    const auto g = profile_values(0.0);
    const double fine = 2.0 * pi * strided_trapezoid(f, g, 1);
    const double mid = 2.0 * pi * strided_trapezoid(f, g, 2);
    const double coarse = 2.0 * pi * strided_trapezoid(f, g, 4);
    out.refinement = {coarse, mid, fine};
    out.value = fine;
    out.error = std::abs(fine - mid) / 3.0;
  } else {
    // Trapezoid in alpha (periodic, spectrally accurate) doubled to tolerance.
    auto alpha_sum = [&](std::size_t m, std::size_t stride) {
      double acc = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        const double a = 2.0 * pi * static_cast<double>(k) / static_cast<double>(m);
        acc += strided_trapezoid(f, profile_values(a), stride);
      }
      return acc * 2.0 * pi / static_cast<double>(m);
    };
    std::size_t m = 16;
    double prev = alpha_sum(m, 1);
    out.refinement.push_back(prev);
    double diff = std::numeric_limits<double>::infinity();
    while (m < 4096) {
      m *= 2;
      const double next = alpha_sum(m, 1);
      out.refinement.push_back(next);
      diff = std::abs(next - prev);
      prev = next;
      if (diff <= kDensityTolerance * std::max(1.0, std::abs(next))) break;
    }
    out.value = prev;
    const double half = alpha_sum(m, 2);
    out.error = diff + std::abs(prev - half) / 3.0;
  }

  if (snap.is_open()) {
    // Planar ends beyond the cutoff: a plane through the origin contributes
    // exp(-R^2 / 4s) outside the ball of radius R.
    const double reach = std::sqrt(w2);
    for (std::size_t j : {std::size_t{0}, n - 1}) {
      const double r = std::max(0.0, std::abs(f.z[j]) - reach);
      out.tail += std::exp(-r * r / (4.0 * s)) * end_factor(j);
    }
  }
  return out;
}

}  // namespace

DensityValue gaussian_density(const CurveSnapshot& snap, const KernelSpec& kernel) {
  const KernelNodes kn = kernel_nodes(snap);
  return kernel_integral(snap, kernel, kn, [](std::size_t, double) { return 1.0; },
                         [](std::size_t) { return 1.0; });
}

DensityValue weighted_theta_moment(const CurveSnapshot& snap, int q, double y,
                                   const KernelSpec& kernel) {
  if (q < 1) throw std::invalid_argument("weighted_theta_moment: q must be a positive integer");
  const KernelNodes kn = kernel_nodes(snap);
  auto power = [&](std::size_t j) { return std::pow(kn.theta[j] - y, 2 * q); };
  return kernel_integral(snap, kernel, kn, [&](std::size_t j, double) { return power(j); }, power);
}

DensityValue huisken_defect(const CurveSnapshot& snap, const KernelSpec& kernel) {
  check_kernel(snap, kernel);
  const KernelNodes kn = kernel_nodes(snap);
  const double scale = 1.0 / (2.0 * (snap.t - kernel.T));
  auto integrand = [&](std::size_t j, double a) {
    const double c = std::cos(a), s = std::sin(a);
    const cplx v = kn.vel.velocity[j];
    const cplx perp = kn.vel.normal_position[j];
    std::array<cplx, 2> diff{(v - scale * perp) * c, (v - scale * perp) * s};
    if (!kernel.at_origin()) {
      // Normal frame at the point: J e1 and J e2 for the tangent frame e1, e2.
      const cplx tan = kn.vel.tangent[j];
      const cplx radial = kn.frame.z[j] / std::abs(kn.frame.z[j]);
      const std::array<cplx, 2> n1{cplx(0, 1) * tan * c, cplx(0, 1) * tan * s};
      const std::array<cplx, 2> n2{-cplx(0, 1) * radial * s, cplx(0, 1) * radial * c};
      const double a1 = dot2(kernel.center, n1), a2 = dot2(kernel.center, n2);
      for (int k = 0; k < 2; ++k) diff[k] += scale * (a1 * n1[k] + a2 * n2[k]);
    }
    return std::norm(diff[0]) + std::norm(diff[1]);
  };
  return kernel_integral(snap, kernel, kn, integrand,
                         [&](std::size_t j) { return integrand(j, 0.0); });
}

double dissipation_in_ball(const CurveSnapshot& snap, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("dissipation_in_ball: radius must be positive");
  const KernelNodes kn = kernel_nodes(snap);
  const auto& f = kn.frame;
  const std::size_t n = f.size();
  std::vector<double> g(n), r(n);
  for (std::size_t j = 0; j < n; ++j) {
    g[j] = (std::norm(kn.vel.velocity[j]) + std::norm(kn.vel.normal_position[j])) * kn.area_density[j];
    r[j] = std::abs(f.z[j]);
  }
  // Trapezoid over segments, cut where |gamma| crosses the radius (linear in p).
  double acc = 0.0;
  const std::size_t segments = f.periodic ? n : n - 1;
  for (std::size_t j = 0; j < segments; ++j) {
    const std::size_t k = (j + 1) % n;
    const double h = k > j ? f.p[k] - f.p[j] : f.p[k] + f.period - f.p[j];
    const bool in_j = r[j] <= radius, in_k = r[k] <= radius;
    if (in_j && in_k) {
      acc += 0.5 * h * (g[j] + g[k]);
    } else if (in_j != in_k) {
      const double s = (radius - r[j]) / (r[k] - r[j]);
      const double g_cut = g[j] + s * (g[k] - g[j]);
      acc += in_j ? 0.5 * s * h * (g[j] + g_cut) : 0.5 * (1.0 - s) * h * (g_cut + g[k]);
    }
  }
  return 2.0 * pi * acc;
}

CurveSnapshot rescale(const CurveSnapshot& snap, double sigma, cplx x0, double T) {
  if (!(sigma > 0.0)) throw std::invalid_argument("rescale: sigma must be positive");
  if (!(snap.t < T)) throw std::invalid_argument("rescale: need t < T");
  CurveSnapshot out;
  out.t = sigma * sigma * (snap.t - T);
  out.beta = snap.beta;
  if (x0 == cplx{}) {
    out = snap;
    out.t = sigma * sigma * (snap.t - T);
    for (auto& z : out.points) z *= sigma;
    if (snap.mode == CurveMode::open_graph)
      for (auto& p : out.params) p *= sigma;
    return out;
  }
  out.mode = CurveMode::polyline;
  out.points = world_points(snap);
  if (!snap.is_open()) out.points.push_back(out.points.front());
  for (auto& z : out.points) z = sigma * (z - x0);
  out.params.assign(out.points.size(), 0.0);
  for (std::size_t j = 1; j < out.points.size(); ++j)
    out.params[j] = out.params[j - 1] + std::abs(out.points[j] - out.points[j - 1]);
  return out;
}

RescaledSequence extract_rescaled_sequence(std::span<const CurveSnapshot> traj, cplx x0, double T,
                                           std::span<const double> scales, double tau) {
  if (traj.empty()) throw std::invalid_argument("rescaled sequence: empty trajectory");
  if (!(tau < 0.0)) throw std::invalid_argument("rescaled sequence: tau must be negative");
  RescaledSequence seq;
  seq.x0 = x0;
  seq.T = T;
  double last_sigma = 0.0;
  for (double sigma : scales) {
    if (!(sigma > last_sigma)) throw std::invalid_argument("rescaled sequence: scales must increase");
    last_sigma = sigma;
    const double target = T + tau / (sigma * sigma);
    if (target < traj.front().t || target > traj.back().t)
      throw std::out_of_range("rescaled sequence: scale " + std::to_string(sigma) +
                              " outside trajectory coverage");
    std::size_t k = 0;
    while (k + 1 < traj.size() && traj[k + 1].t < target) ++k;
    const CurveSnapshot& a = traj[k];
    const CurveSnapshot& b = traj[std::min(k + 1, traj.size() - 1)];
    RescaledMember member;
    member.sigma = sigma;
    member.tau = tau;
    CurveSnapshot at;
    const bool shared = &a != &b && a.mode == b.mode && a.params == b.params && b.t > a.t;
    if (target == a.t || &a == &b) {
      at = a;
    } else if (target == b.t) {
      at = b;
    } else if (shared) {
      const double w = (target - a.t) / (b.t - a.t);
      at = a;
      at.t = target;
      double step = 0.0;
      for (std::size_t j = 0; j < at.size(); ++j) {
        at.points[j] = (1.0 - w) * a.points[j] + w * b.points[j];
        step = std::max(step, std::abs(b.points[j] - a.points[j]));
      }
      member.interpolated = true;
      // Linear interpolation error <= (dt^2 / 8) max |z_tt|; z_tt from a third frame when available.
      double bound = 0.25 * step;
      if (k > 0 && traj[k - 1].params == a.params && traj[k - 1].mode == a.mode) {
        const CurveSnapshot& c = traj[k - 1];
        const double h0 = a.t - c.t, h1 = b.t - a.t;
        double ztt = 0.0;
        for (std::size_t j = 0; j < at.size(); ++j) {
          const cplx second = 2.0 * ((b.points[j] - a.points[j]) / h1 - (a.points[j] - c.points[j]) / h0) / (h0 + h1);
          ztt = std::max(ztt, std::abs(second));
        }
        bound = h1 * h1 / 8.0 * ztt;
      }
      member.error_bound = sigma * bound;
    } else {
      const bool use_a = target - a.t <= b.t - target;
      at = use_a ? a : b;
      double vmax = 0.0;
      for (const auto& v : velocity(at).velocity) vmax = std::max(vmax, std::abs(v));
      member.error_bound = sigma * vmax * std::abs(target - at.t);
    }
    member.snapshot = rescale(at, sigma, x0, T);
    member.snapshot.t = tau;
    seq.members.push_back(std::move(member));
  }
  return seq;
}

}  // namespace equiflow
