#include "equiflow/monitors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "equiflow/snapshot_io.hpp"

namespace equiflow {

namespace {

double dot(cplx a, cplx b) { return a.real() * b.real() + a.imag() * b.imag(); }

constexpr double kBoundSlack = 1e-9;

// Polyline in traversal order; closed curves repeat the first point at the end.
std::vector<cplx> polyline(const CurveSnapshot& snap) {
  auto z = world_points(snap);
  if (!snap.is_open()) z.push_back(z.front());
  return z;
}

// d theta / dp from theta = arg(z z'), evaluated without differencing theta.
std::vector<double> angle_rate(const CurveFrame& f) {
  std::vector<double> out(f.size());
  for (std::size_t j = 0; j < f.size(); ++j)
    out[j] = (f.dz[j] / f.z[j] + f.d2z[j] / f.dz[j]).imag();
  return out;
}

std::vector<double> liouville_density(const CurveFrame& f) {
  std::vector<double> out(f.size());
  for (std::size_t j = 0; j < f.size(); ++j) out[j] = dot(cplx(0.0, 1.0) * f.z[j], f.dz[j]);
  return out;
}

// First derivative and Laplacian of f = periodic part + slope * p. On open
// frames the slope is ignored.
struct Lifted {
  std::vector<double> d1;
  std::vector<double> lap;
};

Lifted lifted_calculus(const CurveFrame& f, std::span<const double> values, double slope) {
  const std::size_t n = f.size();
  if (!f.periodic) slope = 0.0;
  std::vector<double> periodic_part(values.begin(), values.end());
  for (std::size_t j = 0; j < n; ++j) periodic_part[j] -= slope * f.p[j];
  const auto d = differentiate(f.p, periodic_part, f.periodic, f.period);
  Lifted out;
  out.d1.resize(n);
  out.lap = induced_laplacian(f, periodic_part);
  if (slope != 0.0) {
    std::vector<double> ratio(n);
    for (std::size_t j = 0; j < n; ++j) ratio[j] = std::abs(f.z[j]) / std::abs(f.dz[j]);
    const auto dr = differentiate(f.p, ratio, f.periodic, f.period);
    for (std::size_t j = 0; j < n; ++j)
      out.lap[j] += slope * dr.d1[j] / (std::abs(f.z[j]) * std::abs(f.dz[j]));
  }
  for (std::size_t j = 0; j < n; ++j) out.d1[j] = d.d1[j] + slope;
  return out;
}

// Closing value of the continuous lift of arg(z z') one period after node 0.
double closing_angle(const CurveFrame& f, const std::vector<double>& theta) {
  const double raw = std::arg(f.z[0] * f.dz[0]);
  return theta.back() + std::remainder(raw - theta.back(), 2.0 * pi);
}

bool same_grid(const CurveSnapshot& a, const CurveSnapshot& b) {
  return a.mode == b.mode && a.params == b.params && a.rotation == b.rotation &&
         a.beta == b.beta;
}

// Nonuniform three-point time derivative at the middle sample.
struct TimeStencil {
  double wm, w0, wp;
  TimeStencil(double hm, double hp)
      : wm(-hp / (hm * (hm + hp))), w0((hp - hm) / (hm * hp)), wp(hm / (hp * (hm + hp))) {}
  template <class T>
  T operator()(const T& fm, const T& f0, const T& fp) const {
    return wm * fm + w0 * f0 + wp * fp;
  }
};

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    m = 0.5 * (m + lo);
  }
  return m;
}

// Integral of |z| along the part of segment [a, b] inside the disk |z - c| <= rho.
double clipped_weight(cplx a, cplx b, cplx c, double rho) {
  if (!(rho > 0.0)) return 0.0;
  const cplx d = b - a;
  const double len = std::abs(d);
  if (len == 0.0) return 0.0;
  const cplx e = a - c;
  const double qa = std::norm(d), qb = 2.0 * dot(e, d), qc = std::norm(e) - rho * rho;
  const double disc = qb * qb - 4.0 * qa * qc;
  if (disc <= 0.0) return 0.0;
  const double sq = std::sqrt(disc);
  const double s0 = std::max(0.0, (-qb - sq) / (2.0 * qa));
  const double s1 = std::min(1.0, (-qb + sq) / (2.0 * qa));
  if (!(s1 > s0)) return 0.0;
  static constexpr double node[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                     0.5384693101056831, 0.9061798459386640};
  static constexpr double weight[5] = {0.2369268850561891, 0.4786286704993665,
                                       0.5688888888888889, 0.4786286704993665,
                                       0.2369268850561891};
  const double half = 0.5 * (s1 - s0), mid = 0.5 * (s1 + s0);
  double acc = 0.0;
  for (int k = 0; k < 5; ++k) acc += weight[k] * std::abs(a + (mid + half * node[k]) * d);
  return acc * half * len;
}

}  // namespace

SturmianCount sturmian_count(const CurveSnapshot& snap, double alpha) {
  const auto z = polyline(snap);
  const cplx rot = std::polar(1.0, -alpha);
  const std::size_t n = z.size();
  std::vector<double> side(n), along(n);
  for (std::size_t j = 0; j < n; ++j) {
    const cplx w = z[j] * rot;
    side[j] = w.imag();
    along[j] = w.real();
  }
  SturmianCount out;
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const double s0 = side[j], s1 = side[j + 1];
    if ((s0 < 0.0 && s1 > 0.0) || (s0 > 0.0 && s1 < 0.0)) {
      const double w = s0 / (s0 - s1);
      if (along[j] + w * (along[j + 1] - along[j]) > 0.0) ++out.count;
    }
  }
  // Nodes lying exactly on the ray.
  for (std::size_t j = 0; j < n; ++j) {
    if (side[j] != 0.0 || !(along[j] > 0.0)) continue;
    if (j == 0 || j + 1 == n) {
      out.ambiguous = true;
      continue;
    }
    const double before = side[j - 1], after = side[j + 1];
    if (before * after < 0.0)
      ++out.count;
    else
      out.ambiguous = true;
  }
  return out;
}

std::vector<double> radial_speed(const CurveSnapshot& snap) {
  // -theta_phi / r, with phi-derivatives taken through the native parameter.
  const CurveFrame f = curve_frame(snap);
  const std::size_t n = f.size();
  std::vector<double> out(n, 0.0);
  const std::size_t lo = f.periodic ? 0 : 1, hi = f.periodic ? n : n - 1;
  for (std::size_t j = lo; j < hi; ++j) {
    const cplx w = f.dz[j] / f.z[j];
    const double phi_p = w.imag();
    const double theta_p = (w + f.d2z[j] / f.dz[j]).imag();
    if (!(phi_p > 0.0)) throw ResolutionError("radial speed: polar angle not increasing");
    out[j] = -theta_p / (std::abs(f.z[j]) * phi_p);
  }
  return out;
}

ShapeChecks shape_checks(const CurveSnapshot& snap, double drdt_tol) {
  if (!snap.is_open()) throw std::invalid_argument("shape_checks: open profiles only");
  const CurveSnapshot rad = to_radial(snap);
  const std::size_t n = rad.size();
  const auto& phi = rad.params;
  std::vector<double> r(n);
  for (std::size_t j = 0; j < n; ++j) r[j] = std::abs(rad.points[j]);

  ShapeChecks out;
  int last_sign = 0;
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const double d = r[j + 1] - r[j];
    const int s = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
    if (s == 0) continue;
    if (last_sign != 0 && s != last_sign) ++out.critical_points;
    last_sign = s;
  }

  for (std::size_t j = 0; j < n; ++j) {
    const double mirror = snap.beta - phi[j];
    if (mirror < phi.front() || mirror > phi.back()) continue;
    // Mirror-symmetric grids compare node to node; others interpolate.
    const std::size_t k = n - 1 - j;
    const double mirrored = std::abs(phi[k] - mirror) <= 1e-12 ? r[k] : lagrange4(phi, r, mirror);
    out.symmetry_residual = std::max(out.symmetry_residual, std::abs(mirrored - r[j]));
  }

  out.drdt_checked = snap.beta > 0.5 * pi;
  const auto speed = radial_speed(snap);
  out.max_drdt = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 1; j + 1 < n; ++j) {
    out.max_drdt = std::max(out.max_drdt, speed[j]);
    if (out.drdt_checked && speed[j] > drdt_tol) ++out.drdt_violations;
  }
  return out;
}

double angle_at(const CurveSnapshot& snap, double phi) {
  const CurveSnapshot rad = to_radial(snap);
  const auto theta = lagrangian_angle(snap);
  if (phi < rad.params.front() || phi > rad.params.back())
    throw std::invalid_argument("angle_at: polar angle outside the profile");
  return lagrange4(rad.params, theta, phi);
}

double angle_gap(const CurveSnapshot& snap, double eps) {
  if (!(eps > 0.0 && eps < 0.5 * snap.beta))
    throw std::invalid_argument("area law: eps outside (0, beta/2)");
  return angle_at(snap, eps) - angle_at(snap, snap.beta - eps);
}

double area_bound(double beta, double eps) { return pi + 2.0 * eps - 2.0 * beta; }

double area_range_bound(double beta, double eps) { return pi + 4.0 * eps - 2.0 * beta; }

AreaLawSample area_law_step(const CurveSnapshot& a, const CurveSnapshot& b, double eps) {
  if (!a.is_open() || !b.is_open()) throw std::invalid_argument("area law: open profiles only");
  if (!(b.t > a.t)) throw std::invalid_argument("area law: frames must advance in time");
  AreaLawSample s;
  s.t0 = a.t;
  s.t1 = b.t;
  s.dA_dt = (sector_area(b, eps) - sector_area(a, eps)) / (b.t - a.t);
  const double ga = angle_gap(a, eps), gb = angle_gap(b, eps);
  s.angle_gap = 0.5 * (ga + gb);
  s.residual = std::abs(s.dA_dt - s.angle_gap);
  s.bound = area_bound(a.beta, eps);
  s.bound_holds = std::max(ga, gb) <= s.bound + kBoundSlack;
  s.range_bound = area_range_bound(a.beta, eps);
  s.range_bound_holds = std::max(ga, gb) <= s.range_bound + kBoundSlack;
  return s;
}

std::vector<AreaLawSample> area_law_residual(std::span<const CurveSnapshot> traj, double eps) {
  std::vector<AreaLawSample> out;
  for (std::size_t k = 0; k + 1 < traj.size(); ++k)
    out.push_back(area_law_step(traj[k], traj[k + 1], eps));
  return out;
}

EvolutionResiduals evolution_residuals(const CurveSnapshot& prev, const CurveSnapshot& mid,
                                       const CurveSnapshot& next, double t0, double max_gap) {
  EvolutionResiduals out;
  out.t = mid.t;
  if (!same_grid(prev, mid) || !same_grid(mid, next)) {
    out.reason = "frames do not share a parameter grid";
    return out;
  }
  const double hm = mid.t - prev.t, hp = next.t - mid.t;
  if (!(hm > 0.0 && hp > 0.0)) {
    out.reason = "frames not strictly ordered in time";
    return out;
  }
  if (hm > max_gap || hp > max_gap) {
    out.reason = "frames too far apart for time differencing";
    return out;
  }
  const TimeStencil dt(hm, hp);
  const CurveFrame fm = curve_frame(prev), f0 = curve_frame(mid), fp = curve_frame(next);
  const std::size_t n = f0.size();

  auto theta_m = lagrangian_angle(fm), theta0 = lagrangian_angle(f0),
       theta_p = lagrangian_angle(fp);
  const auto align = [&](std::vector<double>& th) {
    const double shift = 2.0 * pi * std::round((theta0[0] - th[0]) / (2.0 * pi));
    for (auto& v : th) v += shift;
  };
  align(theta_m);
  align(theta_p);

  const auto beta_m = liouville_primitive(fm), beta0 = liouville_primitive(f0),
             beta_p = liouville_primitive(fp);

  double theta_slope = 0.0;
  if (f0.periodic) theta_slope = (closing_angle(f0, theta0) - theta0[0]) / f0.period;
  const double beta_slope = f0.periodic ? beta0.holonomy / f0.period : 0.0;

  const Lifted th = lifted_calculus(f0, theta0, theta_slope);
  const Lifted be = lifted_calculus(f0, beta0.values, beta_slope);
  const VelocityField vel = velocity(f0);
  const auto rate = angle_rate(f0);
  const auto lam = liouville_density(f0);

  std::vector<cplx> zt(n);
  std::vector<double> tangential(n);  // <dz/dt, z'> / |z'|^2
  for (std::size_t j = 0; j < n; ++j) {
    zt[j] = dt(fm.z[j], f0.z[j], fp.z[j]);
    tangential[j] = dot(zt[j], f0.dz[j]) / std::norm(f0.dz[j]);
  }

  const std::size_t lo = f0.periodic ? 0 : kResidualMargin;
  const std::size_t hi = f0.periodic ? n : n - kResidualMargin;
  if (hi <= lo + 1) {
    out.reason = "too few interior nodes";
    return out;
  }

  std::vector<double> beta_res;
  std::vector<double> theta_sq(n), theta_sq_m(n), theta_sq_p(n);
  for (std::size_t j = 0; j < n; ++j) {
    theta_sq[j] = theta0[j] * theta0[j];
    theta_sq_m[j] = theta_m[j] * theta_m[j];
    theta_sq_p[j] = theta_p[j] * theta_p[j];
  }
  // theta^2 is not periodic on closed curves; its identity is checked on open ones.
  std::vector<double> lap_theta_sq;
  if (!f0.periodic) lap_theta_sq = induced_laplacian(f0, theta_sq);

  for (std::size_t j = lo; j < hi; ++j) {
    const double theta_t = dt(theta_m[j], theta0[j], theta_p[j]);
    out.theta_heat =
        std::max(out.theta_heat, std::abs(theta_t - th.lap[j] - tangential[j] * th.d1[j]));

    const double beta_t = dt(beta_m.values[j], beta0.values[j], beta_p.values[j]);
    beta_res.push_back(beta_t - be.lap[j] + 2.0 * theta0[j] - tangential[j] * be.d1[j]);

    // Radial law in normal form: (dr/dt measured - (-theta_phi / r)) <e_r, n>.
    const double r = std::abs(f0.z[j]);
    const cplx normal = cplx(0.0, 1.0) * f0.dz[j] / std::abs(f0.dz[j]);
    const double cosine_rn = dot(f0.z[j] / r, normal);
    if (lam[j] != 0.0 && cosine_rn != 0.0) {
      const double measured = dot(zt[j], normal) / cosine_rn;
      const double predicted = -rate[j] * r / lam[j];
      out.radial_law = std::max(out.radial_law, std::abs(measured - predicted) * std::abs(cosine_rn));
    }

    if (!f0.periodic) {
      const double sq_t = dt(theta_sq_m[j], theta_sq[j], theta_sq_p[j]);
      const double grad_sq = th.d1[j] * th.d1[j] / std::norm(f0.dz[j]);
      const double normal_part = sq_t - tangential[j] * 2.0 * theta0[j] * th.d1[j];
      out.theta_sq_residual = std::max(
          out.theta_sq_residual, std::abs(normal_part - lap_theta_sq[j] + 2.0 * grad_sq));
      out.theta_sq_excess = std::max(out.theta_sq_excess, normal_part - lap_theta_sq[j]);
    }
  }
  out.beta_drift = median(beta_res);
  for (double v : beta_res) out.beta_heat = std::max(out.beta_heat, std::abs(v - out.beta_drift));

  // Cosine combination with the spatial constant removed from beta.
  auto psi = [&](const std::vector<double>& beta, const std::vector<double>& theta, double t) {
    std::vector<double> u(n);
    const double shift = out.beta_drift * (t - mid.t);
    for (std::size_t j = 0; j < n; ++j)
      u[j] = std::cos(beta[j] - shift + 2.0 * (t - t0) * theta[j]);
    return u;
  };
  const auto um = psi(beta_m.values, theta_m, prev.t);
  const auto u0 = psi(beta0.values, theta0, mid.t);
  const auto up = psi(beta_p.values, theta_p, next.t);
  const Lifted uc = lifted_calculus(f0, u0, 0.0);
  for (std::size_t j = lo; j < hi; ++j) {
    const double u_t = dt(um[j], u0[j], up[j]);
    const cplx combo = vel.normal_position[j] + 2.0 * (t0 - mid.t) * vel.velocity[j];
    const double rhs = uc.lap[j] + u0[j] * std::norm(combo) + tangential[j] * uc.d1[j];
    out.cosine = std::max(out.cosine, std::abs(u_t - rhs));
  }
  out.reported = true;
  return out;
}

std::vector<EvolutionResiduals> evolution_residuals(std::span<const CurveSnapshot> traj, double t0,
                                                    double max_gap) {
  std::vector<EvolutionResiduals> out;
  for (std::size_t k = 1; k + 1 < traj.size(); ++k)
    out.push_back(evolution_residuals(traj[k - 1], traj[k], traj[k + 1], t0, max_gap));
  return out;
}

CoareaCheck coarea_check(const CurveSnapshot& snap) {
  const CurveFrame f = curve_frame(snap);
  auto theta = lagrangian_angle(f);
  if (f.periodic) theta.push_back(closing_angle(f, theta));

  CoareaCheck out;
  std::vector<std::pair<double, int>> events;
  for (std::size_t j = 0; j + 1 < theta.size(); ++j) {
    const double a = theta[j], b = theta[j + 1];
    out.lhs += std::abs(b - a);
    if (a == b) continue;
    events.emplace_back(std::min(a, b), +1);
    events.emplace_back(std::max(a, b), -1);
  }
  std::sort(events.begin(), events.end());
  int depth = 0;
  for (std::size_t k = 0; k < events.size(); ++k) {
    if (k > 0) out.rhs += depth * (events[k].first - events[k - 1].first);
    depth += events[k].second;
  }
  out.residual = std::abs(out.lhs - out.rhs);
  return out;
}

double shrinker_identity(const CurveSnapshot& snap, double T, double radius) {
  if (!(T > snap.t)) throw std::invalid_argument("shrinker_identity: need T > t");
  const CurveFrame f = curve_frame(snap);
  const auto rate = angle_rate(f);
  const auto lam = liouville_density(f);
  double worst = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) {
    if (std::abs(f.z[j]) > radius) continue;
    worst = std::max(worst, std::abs(2.0 * (snap.t - T) * rate[j] + lam[j]) / std::abs(f.dz[j]));
  }
  return worst;
}

double surface_area_in_ball(const CurveSnapshot& snap, double radius,
                            const std::array<cplx, 2>& x0) {
  if (!(radius > 0.0)) throw std::invalid_argument("area ratio: radius must be positive");
  const auto z = polyline(snap);
  const double w2 = std::norm(x0[0]) + std::norm(x0[1]);
  if (w2 == 0.0) {
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < z.size(); ++j) acc += clipped_weight(z[j], z[j + 1], 0.0, radius);
    return 2.0 * pi * acc;
  }
  // |X(alpha) - x0|^2 = |z - q|^2 + |x0|^2 - |q|^2 with q = cos(a) w1 + sin(a) w2.
  constexpr std::size_t samples = 256;
  double acc = 0.0;
  for (std::size_t k = 0; k < samples; ++k) {
    const double a = 2.0 * pi * static_cast<double>(k) / samples;
    const cplx q = std::cos(a) * x0[0] + std::sin(a) * x0[1];
    const double rho2 = radius * radius - w2 + std::norm(q);
    if (rho2 <= 0.0) continue;
    const double rho = std::sqrt(rho2);
    for (std::size_t j = 0; j + 1 < z.size(); ++j) acc += clipped_weight(z[j], z[j + 1], q, rho);
  }
  return acc * 2.0 * pi / samples;
}

AreaRatio area_ratio_monitor(const CurveSnapshot& snap, std::span<const double> radii,
                             const std::array<cplx, 2>& x0) {
  AreaRatio out;
  for (double r : radii) {
    const double ratio = surface_area_in_ball(snap, r, x0) / (r * r);
    if (ratio > out.max_ratio) {
      out.max_ratio = ratio;
      out.at_radius = r;
    }
  }
  return out;
}

MaslovWinding maslov_winding(const CurveSnapshot& snap) {
  if (snap.is_open()) throw std::invalid_argument("maslov_winding: closed curves only");
  const CurveFrame f = curve_frame(snap);
  const auto theta = lagrangian_angle(f);
  MaslovWinding out;
  out.winding = static_cast<int>(std::lround((closing_angle(f, theta) - theta.front()) / (2.0 * pi)));
  out.holonomy = liouville_primitive(f).holonomy;
  return out;
}

double max_curvature(const CurveSnapshot& snap) {
  const auto v = velocity(snap);
  double worst = 0.0;
  for (const auto& k : v.curvature) worst = std::max(worst, std::abs(k));
  return worst;
}

double min_distance(const CurveSnapshot& snap) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& z : snap.points) {
    const double r = snap.mode == CurveMode::open_graph
                         ? std::abs(std::polar(1.0, -snap.rotation) * z)
                         : std::abs(z);
    m = std::min(m, r);
  }
  return m;
}

DiagnosticsFrame make_frame(const CurveSnapshot& snap, const FrameSettings& settings) {
  DiagnosticsFrame fr;
  fr.t = snap.t;
  const CurveFrame f = curve_frame(snap);
  const auto theta = lagrangian_angle(f);
  const auto [lo, hi] = std::minmax_element(theta.begin(), theta.end());
  fr.theta_min = *lo;
  fr.theta_max = *hi;
  fr.min_dist = min_distance(snap);
  fr.max_curvature = max_curvature(snap);
  fr.coarea_residual = coarea_check(snap).residual;
  if (settings.shrinker_T > snap.t)
    fr.shrinker_residual = shrinker_identity(snap, settings.shrinker_T, settings.shrinker_radius);
  fr.area_ratio_max = area_ratio_monitor(snap, settings.area_radii).max_ratio;

  if (snap.is_open()) {
    for (double q : settings.ray_fractions) {
      const auto c = sturmian_count(snap, q * snap.beta);
      fr.sturmian.push_back(c.ambiguous ? -1 : c.count);
    }
    try {
      const auto sc = shape_checks(snap, settings.drdt_tol);
      fr.critical_points = sc.critical_points;
      fr.symmetry_residual = sc.symmetry_residual;
      if (sc.drdt_checked) fr.max_drdt = sc.max_drdt;
    } catch (const ResolutionError&) {
      fr.radial_graph = false;
    }
    for (double eps : settings.sector_eps) {
      std::optional<double> area;
      if (fr.radial_graph && eps > 0.0 && eps < 0.5 * snap.beta) {
        try {
          area = sector_area(snap, eps);
        } catch (const std::invalid_argument&) {
        }
      }
      fr.sector_areas.push_back(area);
    }
    fr.area_law_residuals.assign(settings.sector_eps.size(), std::nullopt);
  } else {
    fr.sturmian.assign(settings.ray_fractions.size(), std::nullopt);
    fr.sector_areas.assign(settings.sector_eps.size(), std::nullopt);
    fr.area_law_residuals.assign(settings.sector_eps.size(), std::nullopt);
    const auto mw = maslov_winding(snap);
    fr.maslov = mw.winding;
    fr.holonomy = mw.holonomy;
  }
  return fr;
}

void attach_evolution(DiagnosticsFrame& frame, const EvolutionResiduals& res) {
  if (!res.reported) return;
  frame.theta_heat = res.theta_heat;
  frame.beta_heat = res.beta_heat;
  frame.radial_law = res.radial_law;
  frame.cosine = res.cosine;
}

namespace {

std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }
std::string cell(const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); }

}  // namespace

std::vector<std::string> frame_csv_header(const FrameSettings& settings) {
  std::vector<std::string> h{"t", "theta_min", "theta_max", "min_dist", "max_curvature"};
  for (double q : settings.ray_fractions) h.push_back("sturm_" + format_double(q));
  h.insert(h.end(), {"critical_points", "symmetry_residual", "max_drdt", "radial_graph"});
  for (double e : settings.sector_eps) h.push_back("sector_area_" + format_double(e));
  for (double e : settings.sector_eps) h.push_back("area_law_" + format_double(e));
  h.insert(h.end(), {"coarea_residual", "theta_heat", "beta_heat", "radial_law", "cosine",
                     "shrinker_residual", "area_ratio_max", "maslov", "holonomy"});
  return h;
}

std::string frame_csv_row(const DiagnosticsFrame& fr) {
  std::vector<std::string> c{format_double(fr.t), format_double(fr.theta_min),
                             format_double(fr.theta_max), format_double(fr.min_dist),
                             format_double(fr.max_curvature)};
  for (const auto& s : fr.sturmian) c.push_back(cell(s));
  c.push_back(cell(fr.critical_points));
  c.push_back(cell(fr.symmetry_residual));
  c.push_back(cell(fr.max_drdt));
  c.push_back(fr.radial_graph ? "1" : "0");
  for (const auto& a : fr.sector_areas) c.push_back(cell(a));
  for (const auto& a : fr.area_law_residuals) c.push_back(cell(a));
  c.push_back(format_double(fr.coarea_residual));
  c.push_back(cell(fr.theta_heat));
  c.push_back(cell(fr.beta_heat));
  c.push_back(cell(fr.radial_law));
  c.push_back(cell(fr.cosine));
  c.push_back(cell(fr.shrinker_residual));
  c.push_back(format_double(fr.area_ratio_max));
  c.push_back(cell(fr.maslov));
  c.push_back(format_double(fr.holonomy));
  std::string row;
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (k) row += ',';
    row += c[k];
  }
  return row;
}

std::optional<std::size_t> FrameTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) return std::nullopt;
  return static_cast<std::size_t>(it - header.begin());
}

std::vector<std::optional<double>> FrameTable::values(const std::string& name) const {
  const auto col = column(name);
  if (!col) throw std::invalid_argument("diagnostics: no column '" + name + "'");
  std::vector<std::optional<double>> out;
  for (const auto& row : rows) {
    if (*col >= row.size() || row[*col].empty()) {
      out.push_back(std::nullopt);
      continue;
    }
    out.push_back(std::stod(row[*col]));
  }
  return out;
}

FrameTable read_frame_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open diagnostics file " + path.string());
  auto split = [](const std::string& line) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(line);
    while (std::getline(ss, item, ',')) out.push_back(item);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
  };
  FrameTable table;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty diagnostics file " + path.string());
  table.header = split(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto row = split(line);
    if (row.size() != table.header.size())
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": column count does not match header");
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace equiflow
