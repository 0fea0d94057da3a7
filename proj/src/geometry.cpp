#include "equiflow/geometry.hpp"

#include <algorithm>
#include <boost/math/special_functions/fpclassify.hpp>  // pchip uses unqualified isnan
#include <boost/math/interpolators/pchip.hpp>
#include <cmath>
#include <stdexcept>

namespace equiflow {

namespace {

double dot(cplx a, cplx b) { return a.real() * b.real() + a.imag() * b.imag(); }

bool is_radial(CurveMode m) {
  return m == CurveMode::open_radial || m == CurveMode::closed_radial;
}

std::vector<double> moduli(const std::vector<cplx>& z) {
  std::vector<double> r(z.size());
  std::transform(z.begin(), z.end(), r.begin(), [](cplx c) { return std::abs(c); });
  return r;
}

std::vector<double> cumulative_chord(const std::vector<cplx>& z) {
  std::vector<double> s(z.size(), 0.0);
  for (std::size_t j = 1; j < z.size(); ++j) s[j] = s[j - 1] + std::abs(z[j] - z[j - 1]);
  return s;
}

}  // namespace

std::string_view to_string(CurveMode mode) {
  switch (mode) {
    case CurveMode::open_graph: return "open-graph";
    case CurveMode::open_radial: return "open-radial";
    case CurveMode::closed_radial: return "closed-radial";
    case CurveMode::polyline: return "polyline";
  }
  return "unknown";
}

CurveMode curve_mode_from_string(std::string_view name) {
  if (name == "open-graph") return CurveMode::open_graph;
  if (name == "open-radial") return CurveMode::open_radial;
  if (name == "closed-radial") return CurveMode::closed_radial;
  if (name == "polyline") return CurveMode::polyline;
  throw std::invalid_argument("unknown curve mode '" + std::string(name) + "'");
}

void CurveSnapshot::validate() const {
  const std::size_t n = points.size();
  if (params.size() != n) throw std::invalid_argument("snapshot: params/points size mismatch");
  if (n < 3) throw std::invalid_argument("snapshot: need at least 3 nodes");
  if (!std::isfinite(t)) throw std::invalid_argument("snapshot: non-finite time");
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(params[j]) || !std::isfinite(points[j].real()) ||
        !std::isfinite(points[j].imag()))
      throw std::invalid_argument("snapshot: non-finite coordinate at node " + std::to_string(j));
    if (j > 0 && !(params[j] > params[j - 1]))
      throw std::invalid_argument("snapshot: params not strictly increasing at node " +
                                  std::to_string(j));
  }
  if (mode != CurveMode::closed_radial && mode != CurveMode::polyline &&
      !(beta > 0.0 && beta <= pi))
    throw std::invalid_argument("snapshot: beta outside (0, pi]");
  if (is_radial(mode)) {
    for (std::size_t j = 0; j < n; ++j)
      if (!(std::abs(points[j]) > 0.0))
        throw std::invalid_argument("snapshot: radial node at the origin");
  }
  if (mode == CurveMode::open_graph) {
    for (std::size_t j = 1; j < n; ++j)
      if (!(points[j].real() > points[j - 1].real()))
        throw std::invalid_argument("snapshot: graph abscissae not strictly increasing");
  }
  if (mode == CurveMode::closed_radial) {
    if (params.front() < 0.0 || params.back() >= 2.0 * pi)
      throw std::invalid_argument("snapshot: closed params outside [0, 2pi)");
    double turn = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      turn += std::arg(points[(j + 1) % n] / points[j]);
    if (std::abs(turn - 2.0 * pi) > 1e-6)
      throw std::invalid_argument("snapshot: closed curve must wind once around the origin");
  }
}

std::vector<double> clustered_unit_grid(const GridPolicy& grid) {
  if (grid.nodes < 16) throw std::invalid_argument("grid: need at least 16 nodes");
  if (!(grid.cluster >= 0.0 && grid.cluster < 1.0))
    throw std::invalid_argument("grid: cluster strength must lie in [0, 1)");
  const std::size_t n = grid.nodes;
  std::vector<double> g(n);
  for (std::size_t j = 0; j < (n + 1) / 2; ++j) {
    const double xi = -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(n - 1);
    g[j] = xi - grid.cluster * std::sin(pi * xi) / pi;
    g[n - 1 - j] = -g[j];
  }
  if (n % 2 == 1) g[n / 2] = 0.0;
  return g;
}

double initial_radius(double beta, double phi) {
  return std::pow(std::sin(pi * phi / beta), -beta / pi);
}

namespace {

void check_beta(double beta) {
  if (!(beta > 0.0 && beta <= pi)) throw std::invalid_argument("beta must lie in (0, pi]");
}

}  // namespace

CurveSnapshot initial_profile(double beta, const GridPolicy& grid, double r_cut) {
  check_beta(beta);
  if (!(r_cut > 1.0)) throw std::invalid_argument("cutoff radius must exceed 1");
  const auto g = clustered_unit_grid(grid);
  const double phi_min = beta / pi * std::asin(std::pow(r_cut, -pi / beta));
  const double half = 0.5 * beta - phi_min;
  CurveSnapshot snap;
  snap.mode = CurveMode::open_radial;
  snap.beta = beta;
  snap.params.resize(g.size());
  snap.points.resize(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double phi = 0.5 * beta + half * g[j];
    snap.params[j] = phi;
    snap.points[j] = std::polar(initial_radius(beta, phi), phi);
  }
  snap.validate();
  return snap;
}

CurveSnapshot initial_profile_graph(double beta, const GridPolicy& grid, double half_width) {
  check_beta(beta);
  if (!(half_width > 0.0)) throw std::invalid_argument("graph half-width must be positive");
  const auto g = clustered_unit_grid(grid);
  const double rho = 0.5 * (pi - beta);
  // Rotated abscissa x(s) = r0(s) cos(s + rho) decreases from +inf to -inf on (0, beta).
  auto solve_u = [&](double x) {
    double lo = 0.0, hi = beta;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      const double xm = initial_radius(beta, mid) * std::cos(mid + rho);
      (xm > x ? lo : hi) = mid;
    }
    const double s = 0.5 * (lo + hi);
    return initial_radius(beta, s) * std::sin(s + rho);
  };
  const std::size_t n = g.size();
  CurveSnapshot snap;
  snap.mode = CurveMode::open_graph;
  snap.beta = beta;
  snap.rotation = rho;
  snap.params.resize(n);
  snap.points.resize(n);
  for (std::size_t j = n / 2; j < n; ++j) {
    const double x = half_width * g[j];
    const double u = solve_u(x);
    snap.params[j] = x;
    snap.points[j] = {x, u};
    snap.params[n - 1 - j] = -x;
    snap.points[n - 1 - j] = {-x, u};
  }
  snap.validate();
  return snap;
}

CurveSnapshot circle_profile(double radius, std::size_t nodes) {
  if (!(radius > 0.0)) throw std::invalid_argument("circle radius must be positive");
  if (nodes < 16) throw std::invalid_argument("grid: need at least 16 nodes");
  CurveSnapshot snap;
  snap.mode = CurveMode::closed_radial;
  snap.beta = pi;
  snap.params.resize(nodes);
  snap.points.resize(nodes);
  for (std::size_t j = 0; j < nodes; ++j) {
    const double phi = 2.0 * pi * static_cast<double>(j) / static_cast<double>(nodes);
    snap.params[j] = phi;
    snap.points[j] = std::polar(radius, phi);
  }
  return snap;
}

std::vector<cplx> world_points(const CurveSnapshot& snap) {
  if (snap.mode != CurveMode::open_graph) return snap.points;
  const cplx unrotate = std::polar(1.0, -snap.rotation);
  std::vector<cplx> z(snap.size());
  for (std::size_t k = 0; k < z.size(); ++k) z[k] = unrotate * snap.points[z.size() - 1 - k];
  return z;
}

CurveFrame curve_frame(const CurveSnapshot& snap) {
  const std::size_t n = snap.size();
  if (n < 3 || snap.params.size() != n) throw std::invalid_argument("curve_frame: bad snapshot");
  CurveFrame f;
  f.z.resize(n);
  f.dz.resize(n);
  f.d2z.resize(n);
  switch (snap.mode) {
    case CurveMode::open_radial:
    case CurveMode::closed_radial: {
      f.periodic = snap.mode == CurveMode::closed_radial;
      f.period = f.periodic ? 2.0 * pi : 0.0;
      f.p = snap.params;
      const auto r = moduli(snap.points);
      const auto d = differentiate(f.p, r, f.periodic, f.period);
      for (std::size_t j = 0; j < n; ++j) {
        const cplx e = snap.points[j] / r[j];
        f.z[j] = snap.points[j];
        f.dz[j] = cplx(d.d1[j], r[j]) * e;
        f.d2z[j] = cplx(d.d2[j] - r[j], 2.0 * d.d1[j]) * e;
      }
      break;
    }
    case CurveMode::open_graph: {
      std::vector<double> u(n);
      for (std::size_t j = 0; j < n; ++j) u[j] = snap.points[j].imag();
      const auto d = differentiate(snap.params, u);
      const cplx unrotate = std::polar(1.0, -snap.rotation);
      f.p.resize(n);
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t j = n - 1 - k;
        f.p[k] = -snap.params[j];
        f.z[k] = unrotate * snap.points[j];
        f.dz[k] = unrotate * cplx(-1.0, -d.d1[j]);
        f.d2z[k] = unrotate * cplx(0.0, d.d2[j]);
      }
      break;
    }
    case CurveMode::polyline: {
      f.p = cumulative_chord(snap.points);
      f.z = snap.points;
      auto d = differentiate(f.p, std::span<const cplx>(f.z));
      f.dz = std::move(d.d1);
      f.d2z = std::move(d.d2);
      break;
    }
  }
  for (std::size_t j = 0; j < n; ++j)
    if (!(std::abs(f.dz[j]) > 0.0) || !std::isfinite(std::abs(f.dz[j])))
      throw ResolutionError("degenerate tangent at node " + std::to_string(j));
  return f;
}

std::vector<double> lagrangian_angle(const CurveFrame& frame) {
  const std::size_t n = frame.size();
  std::vector<double> theta(n);
  for (std::size_t j = 0; j < n; ++j) {
    theta[j] = std::arg(frame.z[j] * frame.dz[j]);
    if (j > 0) theta[j] = theta[j - 1] + std::remainder(theta[j] - theta[j - 1], 2.0 * pi);
  }
  const double base = 2.0 * std::arg(frame.z[0]);
  const double pinned = wrap_angle(theta[0] - base, -0.5 * pi) + base;
  const double shift = pinned - theta[0];
  for (auto& v : theta) v += shift;
  return theta;
}

std::vector<double> lagrangian_angle(const CurveSnapshot& snap) {
  return lagrangian_angle(curve_frame(snap));
}

VelocityField velocity(const CurveFrame& frame) {
  const std::size_t n = frame.size();
  VelocityField v;
  v.velocity.resize(n);
  v.curvature.resize(n);
  v.tangent.resize(n);
  v.normal_position.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double r2 = std::norm(frame.z[j]);
    if (!(r2 > 0.0)) throw std::invalid_argument("velocity: node at the origin");
    const double speed = std::abs(frame.dz[j]);
    const cplx tan = frame.dz[j] / speed;
    const cplx k = (frame.d2z[j] - dot(frame.d2z[j], tan) * tan) / (speed * speed);
    const cplx perp = frame.z[j] - dot(frame.z[j], tan) * tan;
    v.tangent[j] = tan;
    v.curvature[j] = k;
    v.normal_position[j] = perp;
    v.velocity[j] = k - perp / r2;
  }
  return v;
}

VelocityField velocity(const CurveSnapshot& snap) { return velocity(curve_frame(snap)); }

LiouvillePrimitive liouville_primitive(const CurveFrame& frame) {
  const std::size_t n = frame.size();
  std::vector<double> lam(n);
  for (std::size_t j = 0; j < n; ++j) lam[j] = dot(cplx(0.0, 1.0) * frame.z[j], frame.dz[j]);
  LiouvillePrimitive out;
  out.values = cumulative_trapezoid(frame.p, lam);
  if (frame.periodic) out.holonomy = trapezoid(frame.p, lam, true, frame.period);
  return out;
}

LiouvillePrimitive liouville_primitive(const CurveSnapshot& snap) {
  return liouville_primitive(curve_frame(snap));
}

CurveSnapshot to_radial(const CurveSnapshot& snap) {
  if (snap.mode == CurveMode::open_radial) return snap;
  if (snap.mode == CurveMode::closed_radial)
    throw std::invalid_argument("to_radial: closed curves are already radial");
  CurveSnapshot out;
  out.t = snap.t;
  out.mode = CurveMode::open_radial;
  out.beta = snap.beta;
  out.points = world_points(snap);
  out.params.resize(out.points.size());
  for (std::size_t j = 0; j < out.points.size(); ++j) {
    if (!(std::abs(out.points[j]) > 0.0)) throw ResolutionError("to_radial: node at the origin");
    out.params[j] = std::arg(out.points[j]);
    if (j > 0 && !(out.params[j] > out.params[j - 1]))
      throw ResolutionError("curve is no longer a radial graph near node " + std::to_string(j));
  }
  return out;
}

double sector_area(const CurveSnapshot& snap, double eps) {
  if (!(eps > 0.0 && eps <= 0.5 * snap.beta))
    throw std::invalid_argument("sector_area: eps outside (0, beta/2]");
  if (eps == 0.5 * snap.beta) return 0.0;
  const CurveSnapshot rad = to_radial(snap);
  const auto& phi = rad.params;
  const double a = eps, b = snap.beta - eps;
  if (phi.front() > a || phi.back() < b)
    throw std::invalid_argument("sector_area: profile does not cover [eps, beta - eps]");
  // Fan of triangles from the origin over the chords of the profile.
  std::vector<double> r(phi.size());
  for (std::size_t j = 0; j < phi.size(); ++j) r[j] = std::abs(rad.points[j]);
  std::vector<cplx> poly{std::polar(lagrange4(phi, r, a), a)};
  for (std::size_t j = 0; j < phi.size(); ++j)
    if (phi[j] > a && phi[j] < b) poly.push_back(rad.points[j]);
  poly.push_back(std::polar(lagrange4(phi, r, b), b));
  double area = 0.0;
  for (std::size_t k = 0; k + 1 < poly.size(); ++k)
    area += 0.5 * (std::conj(poly[k]) * poly[k + 1]).imag();
  return area;
}

std::vector<double> induced_laplacian(const CurveFrame& frame, std::span<const double> f) {
  const std::size_t n = frame.size();
  if (n < 3) throw std::invalid_argument("induced_laplacian: need at least 3 nodes");
  if (f.size() != n) throw std::invalid_argument("induced_laplacian: size mismatch");
  std::vector<double> speed(n), ratio(n);
  for (std::size_t j = 0; j < n; ++j) {
    speed[j] = std::abs(frame.dz[j]);
    ratio[j] = std::abs(frame.z[j]) / speed[j];
  }
  const auto df = differentiate(frame.p, f, frame.periodic, frame.period);
  const auto dr = differentiate(frame.p, ratio, frame.periodic, frame.period);
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j)
    out[j] = df.d2[j] / (speed[j] * speed[j]) +
             df.d1[j] * dr.d1[j] / (std::abs(frame.z[j]) * speed[j]);
  return out;
}

std::vector<double> induced_laplacian(const CurveSnapshot& snap, std::span<const double> f) {
  return induced_laplacian(curve_frame(snap), f);
}

namespace {

// Native parameter q, native value v, and speed |gamma'| in node order.
struct NativeRep {
  std::vector<double> q;
  std::vector<double> v;
  std::vector<double> speed;
  bool periodic = false;
};

NativeRep native_rep(const CurveSnapshot& snap) {
  NativeRep rep;
  const std::size_t n = snap.size();
  rep.q = snap.params;
  rep.v.resize(n);
  rep.speed.resize(n);
  switch (snap.mode) {
    case CurveMode::open_graph: {
      for (std::size_t j = 0; j < n; ++j) rep.v[j] = snap.points[j].imag();
      const auto d = differentiate(rep.q, rep.v);
      for (std::size_t j = 0; j < n; ++j) rep.speed[j] = std::hypot(1.0, d.d1[j]);
      break;
    }
    case CurveMode::open_radial:
    case CurveMode::closed_radial: {
      rep.periodic = snap.mode == CurveMode::closed_radial;
      for (std::size_t j = 0; j < n; ++j) rep.v[j] = std::abs(snap.points[j]);
      const auto d = differentiate(rep.q, rep.v, rep.periodic, 2.0 * pi);
      for (std::size_t j = 0; j < n; ++j) rep.speed[j] = std::hypot(d.d1[j], rep.v[j]);
      break;
    }
    case CurveMode::polyline:
      throw std::invalid_argument("regrid: polyline snapshots are not supported");
  }
  return rep;
}

using Pchip = boost::math::interpolators::pchip<std::vector<double>>;

}  // namespace

std::vector<double> arclength_spacing(const CurveSnapshot& snap) {
  if (snap.mode == CurveMode::polyline) {
    std::vector<double> ds(snap.size() - 1);
    for (std::size_t j = 0; j + 1 < snap.size(); ++j)
      ds[j] = std::abs(snap.points[j + 1] - snap.points[j]);
    return ds;
  }
  const NativeRep rep = native_rep(snap);
  const std::size_t n = rep.q.size();
  std::vector<double> ds;
  for (std::size_t j = 0; j + 1 < n; ++j)
    ds.push_back(0.5 * (rep.q[j + 1] - rep.q[j]) * (rep.speed[j] + rep.speed[j + 1]));
  if (rep.periodic)
    ds.push_back(0.5 * (rep.q[0] + 2.0 * pi - rep.q[n - 1]) * (rep.speed[n - 1] + rep.speed[0]));
  return ds;
}

double spacing_ratio(const CurveSnapshot& snap) {
  const auto ds = arclength_spacing(snap);
  const auto [lo, hi] = std::minmax_element(ds.begin(), ds.end());
  return *hi / *lo;
}

double curve_length(const CurveSnapshot& snap) {
  const auto ds = arclength_spacing(snap);
  double s = 0.0;
  for (double d : ds) s += d;
  return s;
}

CurveSnapshot regrid(const CurveSnapshot& snap, const RegridPolicy& policy) {
  const NativeRep rep = native_rep(snap);
  const std::size_t n = rep.q.size();
  if (n < 4) throw std::invalid_argument("regrid: need at least 4 nodes");
  const auto ds = arclength_spacing(snap);

  // Extended (q, s, v) tables; periodic curves get a wrapped copy on each side.
  std::vector<double> q, s, v;
  const std::size_t pad = rep.periodic ? 3 : 0;
  double total = 0.0;
  for (double d : ds) total += d;
  std::vector<double> cum(n, 0.0);
  for (std::size_t j = 1; j < n; ++j) cum[j] = cum[j - 1] + ds[j - 1];
  for (std::size_t k = 0; k < pad; ++k) {
    const std::size_t j = n - pad + k;
    q.push_back(rep.q[j] - 2.0 * pi);
    s.push_back(cum[j] - total);
    v.push_back(rep.v[j]);
  }
  for (std::size_t j = 0; j < n; ++j) {
    q.push_back(rep.q[j]);
    s.push_back(cum[j]);
    v.push_back(rep.v[j]);
  }
  for (std::size_t j = 0; j < pad; ++j) {
    q.push_back(rep.q[j] + 2.0 * pi);
    s.push_back(cum[j] + total);
    v.push_back(rep.v[j]);
  }
  for (std::size_t j = 1; j < s.size(); ++j)
    if (!(s[j] > s[j - 1])) throw ResolutionError("regrid: arclength not monotone");

  Pchip q_of_s{std::vector<double>(s), std::vector<double>(q)};
  Pchip v_of_q{std::vector<double>(q), std::vector<double>(v)};

  CurveSnapshot out = snap;
  const double span_len = rep.periodic ? total : cum[n - 1];
  const double denom = static_cast<double>(rep.periodic ? n : n - 1);
  for (std::size_t k = 0; k < n; ++k) {
    double qk, vk;
    if (!rep.periodic && (k == 0 || k == n - 1)) {
      qk = rep.q[k];
      vk = rep.v[k];
    } else if (rep.periodic && k == 0) {
      qk = rep.q[0];
      vk = rep.v[0];
    } else {
      qk = q_of_s(span_len * static_cast<double>(k) / denom);
      vk = v_of_q(qk);
    }
    out.params[k] = qk;
    out.points[k] = snap.mode == CurveMode::open_graph ? cplx(qk, vk) : std::polar(vk, qk);
  }
  out.validate();

  const double new_len = curve_length(out);
  if (std::abs(new_len - total) > policy.length_tolerance * total)
    throw ResolutionError("regrid: total length not preserved within tolerance");
  if (spacing_ratio(out) > policy.max_spacing_ratio)
    throw ResolutionError("regrid: spacing ratio above policy bound");
  return out;
}

}  // namespace equiflow
