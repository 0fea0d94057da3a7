#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "equiflow/numerics.hpp"

namespace equiflow {

/// How a profile curve is represented.
///  - open_graph: (x, u(x)) in coordinates rotated by `rotation`; the world
///    curve is e^{-i rotation} (x + i u).
///  - open_radial: r(phi) e^{i phi} for phi in (0, beta).
///  - closed_radial: r(phi) e^{i phi}, phi periodic on [0, 2pi).
///  - polyline: generic open point list (analysis output only).
enum class CurveMode { open_graph, open_radial, closed_radial, polyline };

std::string_view to_string(CurveMode mode);
CurveMode curve_mode_from_string(std::string_view name);

/// Thrown when the discretization can no longer resolve the curve
/// (coincident nodes, vanishing tangent, non-monotone angle).
class ResolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Immutable discretized profile curve at one time.
struct CurveSnapshot {
  double t = 0.0;
  CurveMode mode = CurveMode::open_radial;
  double beta = pi;
  double rotation = 0.0;
  std::vector<double> params;
  std::vector<cplx> points;

  std::size_t size() const { return points.size(); }
  bool is_open() const { return mode != CurveMode::closed_radial; }

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;
};

/// Node clustering along the parameter. strength = 0 is uniform; values in
/// (0, 1) concentrate nodes toward the middle of the parameter interval, where
/// the spacing shrinks by a factor (1 - strength).
struct GridPolicy {
  std::size_t nodes = 512;
  double cluster = 0.0;
};

/// Symmetric node positions on [-1, 1] following the policy.
std::vector<double> clustered_unit_grid(const GridPolicy& grid);

/// r0(phi) = sin(pi phi / beta)^(-beta / pi).
double initial_radius(double beta, double phi);

/// Initial profile sampled in open-radial mode on [phi_min, beta - phi_min],
/// with phi_min chosen so that r0(phi_min) = r_cut.
CurveSnapshot initial_profile(double beta, const GridPolicy& grid, double r_cut = 20.0);

/// Initial profile as a graph over [-half_width, half_width] after rotating
/// the axes by (pi - beta)/2.
CurveSnapshot initial_profile_graph(double beta, const GridPolicy& grid, double half_width = 10.0);

/// Circle of radius r centered at the origin, closed-radial mode.
CurveSnapshot circle_profile(double radius, std::size_t nodes);

/// Points in the world frame, in traversal order (increasing polar angle for
/// open profiles, so graph snapshots are traversed right to left).
std::vector<cplx> world_points(const CurveSnapshot& snap);

/// Local geometry of a snapshot in traversal order. Derivatives are with
/// respect to the increasing traversal parameter `p` and are taken of the
/// native representation (r(phi) or u(x)), not of the point list.
struct CurveFrame {
  std::vector<double> p;
  std::vector<cplx> z;
  std::vector<cplx> dz;
  std::vector<cplx> d2z;
  bool periodic = false;
  double period = 0.0;

  std::size_t size() const { return z.size(); }
};

CurveFrame curve_frame(const CurveSnapshot& snap);

/// Per-node Lagrangian angle theta = arg(gamma gamma'), continuously lifted
/// along the curve. The lift puts theta - 2 arg(gamma) in [-pi/2, 3pi/2) at
/// the first node, which gives theta -> pi at the phi -> 0 end of the
/// standard initial family.
std::vector<double> lagrangian_angle(const CurveSnapshot& snap);
std::vector<double> lagrangian_angle(const CurveFrame& frame);

/// Profile curvature vector k and the normal velocity k - gamma_perp/|gamma|^2.
struct VelocityField {
  std::vector<cplx> velocity;
  std::vector<cplx> curvature;
  std::vector<cplx> tangent;  // unit tangent in traversal direction
  std::vector<cplx> normal_position;  // gamma_perp
};

VelocityField velocity(const CurveSnapshot& snap);
VelocityField velocity(const CurveFrame& frame);

/// Cumulative integral of the Liouville form <i gamma, gamma'> dp.
struct LiouvillePrimitive {
  std::vector<double> values;  // 0 on the first node
  double holonomy = 0.0;       // closed curves only; 0 for open curves
};

LiouvillePrimitive liouville_primitive(const CurveSnapshot& snap);
LiouvillePrimitive liouville_primitive(const CurveFrame& frame);

/// Converts an open snapshot to open-radial form with phi_j = arg(gamma_j).
/// Throws ResolutionError when the polar angle is not strictly increasing.
CurveSnapshot to_radial(const CurveSnapshot& snap);

/// Area of {u e^{i phi} : eps <= phi <= beta - eps, 0 <= u <= r(phi)}.
double sector_area(const CurveSnapshot& snap, double eps);

/// Laplacian on the rotationally symmetric surface of an alpha-independent
/// function given at the nodes (traversal order):
///   Delta f = f''/|g'|^2 + f' (|g| / |g'|)' / (|g| |g'|).
/// End nodes of open curves use one-sided stencils (lower order).
std::vector<double> induced_laplacian(const CurveFrame& frame, std::span<const double> f);
std::vector<double> induced_laplacian(const CurveSnapshot& snap, std::span<const double> f);

/// Resampling policy: nodes are redistributed to uniform arclength.
struct RegridPolicy {
  double max_spacing_ratio = 4.0;  // bound on max/min arclength spacing after regrid
  double length_tolerance = 1e-6;  // relative change in total length allowed
};

/// Arclength spacing between consecutive nodes (native-representation
/// quadrature of |gamma'|), in node order.
std::vector<double> arclength_spacing(const CurveSnapshot& snap);

/// max/min ratio of arclength_spacing.
double spacing_ratio(const CurveSnapshot& snap);

CurveSnapshot regrid(const CurveSnapshot& snap, const RegridPolicy& policy = {});

/// Total length by native-representation quadrature.
double curve_length(const CurveSnapshot& snap);

}  // namespace equiflow
