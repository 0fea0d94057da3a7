#pragma once

#include <array>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "equiflow/geometry.hpp"

namespace equiflow {

/// A monitor value with the tolerance it is judged against. Monitors never
/// assert; the caller (the `verify` command) owns the pass/fail policy.
struct MonitorReading {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = true;
};

struct SturmianCount {
  int count = 0;
  bool ambiguous = false;  // tangential touch; not counted
};

/// Transversal crossings of the polyline with the ray {u e^{i alpha}, u > 0}.
SturmianCount sturmian_count(const CurveSnapshot& snap, double alpha);

struct ShapeChecks {
  int critical_points = 0;         // sign changes of r'
  double symmetry_residual = 0.0;  // sup |r(beta/2 + s) - r(beta/2 - s)|
  double max_drdt = 0.0;           // max over interior nodes of dr/dt at fixed angle
  std::size_t drdt_violations = 0; // nodes with dr/dt > tol
  bool drdt_checked = false;       // only for beta in (pi/2, pi]
};

ShapeChecks shape_checks(const CurveSnapshot& snap, double drdt_tol = 1e-8);

/// dr/dt at fixed polar angle, -theta_phi / r, per profile node (open end nodes
/// set to 0). Throws ResolutionError where the polar angle is not increasing.
std::vector<double> radial_speed(const CurveSnapshot& snap);

/// Sector-area law on one interval between consecutive frames:
/// dA/dt = theta(eps) - theta(beta - eps) < pi + 2 eps - 2 beta.
struct AreaLawSample {
  double t0 = 0.0;
  double t1 = 0.0;
  double dA_dt = 0.0;
  double angle_gap = 0.0;  // trapezoid average over the interval
  double residual = 0.0;
  double bound = 0.0;  // pi + 2 eps - 2 beta
  bool bound_holds = true;
  double range_bound = 0.0;  // pi + 4 eps - 2 beta, from 2 phi < theta < 2 phi + pi
  bool range_bound_holds = true;
};

/// Upper bounds on theta(eps) - theta(beta - eps): the nominal one, and the
/// one implied by the angle range 2 phi < theta < 2 phi + pi.
double area_bound(double beta, double eps);
double area_range_bound(double beta, double eps);

/// theta at polar angle phi, interpolated on the radial view.
double angle_at(const CurveSnapshot& snap, double phi);

/// theta(eps) - theta(beta - eps) on one snapshot.
double angle_gap(const CurveSnapshot& snap, double eps);

AreaLawSample area_law_step(const CurveSnapshot& a, const CurveSnapshot& b, double eps);
std::vector<AreaLawSample> area_law_residual(std::span<const CurveSnapshot> traj, double eps);

/// Residuals of the evolution identities at the middle of three consecutive
/// snapshots sharing one parameter grid. Time derivatives are taken at fixed
/// parameter, so each identity carries the tangential term <dx/dt, grad f>.
///   theta_heat : d theta/dt = Laplacian theta
///   beta_heat  : d beta/dt  = Laplacian beta - 2 theta (modulo a spatial constant)
///   radial_law : dr/dt      = -theta_phi / r
///   cosine     : du/dt = Laplacian u + u |x_perp + 2(t0 - t) H|^2,
///                u = cos(beta + 2 (t - t0) theta)
struct EvolutionResiduals {
  bool reported = false;
  std::string reason;  // why not reported
  double t = 0.0;
  double theta_heat = 0.0;
  double beta_heat = 0.0;
  double radial_law = 0.0;
  double cosine = 0.0;
  double beta_drift = 0.0;        // the removed spatial constant d c/dt
  double theta_sq_residual = 0.0; // |d theta^2/dt - Laplacian theta^2 + 2 |grad theta|^2|
  double theta_sq_excess = 0.0;   // max positive part of d theta^2/dt - Laplacian theta^2
};

inline constexpr std::size_t kResidualMargin = 3;

EvolutionResiduals evolution_residuals(const CurveSnapshot& prev, const CurveSnapshot& mid,
                                       const CurveSnapshot& next, double t0,
                                       double max_gap = std::numeric_limits<double>::infinity());

std::vector<EvolutionResiduals> evolution_residuals(
    std::span<const CurveSnapshot> traj, double t0,
    double max_gap = std::numeric_limits<double>::infinity());

struct CoareaCheck {
  double lhs = 0.0;  // integral of |theta'| over the piecewise-linear profile
  double rhs = 0.0;  // integral over levels of the level-set count
  double residual = 0.0;
};

CoareaCheck coarea_check(const CurveSnapshot& snap);

/// sup over nodes with |gamma| <= radius of |2(t - T) d theta + lambda| on the
/// unit tangent.
double shrinker_identity(const CurveSnapshot& snap, double T,
                         double radius = std::numeric_limits<double>::infinity());

struct AreaRatio {
  double max_ratio = 0.0;
  double at_radius = 0.0;
};

/// Surface area of the rotation surface inside B_r(x0), divided by r^2;
/// maximum over the given radii. x0 is a point of C^2.
double surface_area_in_ball(const CurveSnapshot& snap, double radius,
                            const std::array<cplx, 2>& x0 = {});
AreaRatio area_ratio_monitor(const CurveSnapshot& snap, std::span<const double> radii,
                             const std::array<cplx, 2>& x0 = {});

struct MaslovWinding {
  int winding = 0;
  double holonomy = 0.0;
};

MaslovWinding maslov_winding(const CurveSnapshot& snap);

/// Max |k| over nodes.
double max_curvature(const CurveSnapshot& snap);
double min_distance(const CurveSnapshot& snap);

struct FrameSettings {
  std::vector<double> ray_fractions{0.25, 0.5, 0.75};
  std::vector<double> sector_eps{0.2, 0.3};
  std::vector<double> area_radii{0.5, 1.0, 2.0, 4.0, 8.0};
  double shrinker_T = 1.0;
  double shrinker_radius = std::numeric_limits<double>::infinity();
  double drdt_tol = 1e-8;
};

/// Per-cadence monitor readings. Optional fields are absent when the
/// monitor does not apply to the snapshot's mode or lacks neighbouring data.
struct DiagnosticsFrame {
  double t = 0.0;
  double theta_min = 0.0;
  double theta_max = 0.0;
  double min_dist = 0.0;
  double max_curvature = 0.0;
  std::vector<std::optional<int>> sturmian;  // -1 marks an ambiguous touch
  std::optional<int> critical_points;
  std::optional<double> symmetry_residual;
  std::optional<double> max_drdt;
  bool radial_graph = true;  // false when the open curve is no longer a radial graph
  std::vector<std::optional<double>> sector_areas;
  std::vector<std::optional<double>> area_law_residuals;
  double coarea_residual = 0.0;
  std::optional<double> theta_heat;
  std::optional<double> beta_heat;
  std::optional<double> radial_law;
  std::optional<double> cosine;
  std::optional<double> shrinker_residual;
  double area_ratio_max = 0.0;
  std::optional<int> maslov;
  double holonomy = 0.0;
};

/// Snapshot-local monitors; area-law and evolution fields are filled by the
/// caller once neighbouring frames exist.
DiagnosticsFrame make_frame(const CurveSnapshot& snap, const FrameSettings& settings);

void attach_evolution(DiagnosticsFrame& frame, const EvolutionResiduals& res);

std::vector<std::string> frame_csv_header(const FrameSettings& settings);
std::string frame_csv_row(const DiagnosticsFrame& frame);

/// Parsed diagnostics table: header plus rows of cells (empty = absent).
struct FrameTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(const std::string& name) const;
  std::vector<std::optional<double>> values(const std::string& name) const;
};

FrameTable read_frame_table(const std::filesystem::path& path);

}  // namespace equiflow
