#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "equiflow/geometry.hpp"
#include "equiflow/monitors.hpp"

namespace equiflow {

enum class IntegratorMode { graph, radial };

/// Initial data family: the cone-asymptotic profile, or a round circle.
struct InitialFamily {
  enum class Kind { standard, circle } kind = Kind::standard;
  double circle_radius = 1.0;
};

struct FlowConfig {
  double beta = 3.0 * pi / 4.0;
  IntegratorMode mode = IntegratorMode::graph;
  std::size_t nodes = 512;
  double cluster = 0.0;
  double r_cut = 20.0;      // open-radial truncation radius
  double half_width = 10.0; // graph truncation |x| <= half_width
  double cfl_factor = 0.4;
  double dt_min = 1e-12;
  double dt_max = 1e-3;
  double t_end = 1.0;
  double min_dist_tol = 0.01;
  double max_curvature_cap = 1e4;
  double regrid_ratio = 0.0;  // 0 disables regridding
  double regrid_length_tol = 1e-6;
  double snapshot_dt = 0.005;
  double snapshot_shrink = 0.9;  // also emit when min|gamma| drops below this fraction
  InitialFamily family;
  std::filesystem::path output_dir = "equiflow_out";
  std::vector<double> sector_eps{0.2, 0.3};
  std::vector<double> ray_fractions{0.25, 0.5, 0.75};
  std::vector<double> area_radii{0.5, 1.0, 2.0, 4.0, 8.0};
  std::optional<double> kernel_T;  // reference time for kernel-based monitors
  double drdt_tol = 1e-8;

  bool closed() const { return family.kind == InitialFamily::Kind::circle; }

  /// Kernel time: configured value, r0^2/4 for circles, otherwise t_end.
  double reference_time() const;

  FrameSettings frame_settings() const;

  /// Throws std::invalid_argument on a violated invariant.
  void validate() const;
};

enum class RunStatus { running, reached_t_end, blowup_detected, resolution_exhausted };

std::string_view to_string(RunStatus status);
RunStatus run_status_from_string(std::string_view name);

struct StepStats {
  double dt = 0.0;
  double max_velocity = 0.0;
  double min_radius = 0.0;
  bool regridded = false;
};

struct FlowState {
  CurveSnapshot snapshot;
  std::size_t step = 0;
  std::vector<DiagnosticsFrame> frames;
  RunStatus status = RunStatus::running;
  double last_dt = 0.0;
  bool dt_pinned = false;  // adaptive dt clamped at dt_min on the last step
};

/// Initial snapshot for the configured family and mode.
CurveSnapshot initial_snapshot(const FlowConfig& config);
FlowState initial_state(const FlowConfig& config);

/// Time derivative of the native coordinate (u in graph mode, r in radial
/// modes) at each node; zero at the frozen ends of open profiles.
std::vector<double> native_rate(const CurveSnapshot& snap);

/// Accepted step: the state advances by `dt`. A step that would produce a
/// non-finite value or a node at the origin is not applied; dt is halved until
/// dt_min, after which the state becomes resolution_exhausted.
StepStats step(FlowState& state, double dt, const FlowConfig& config);

/// One RK4 update of a snapshot; std::nullopt when the update is rejected.
std::optional<CurveSnapshot> rk4_update(const CurveSnapshot& snap, double dt);

/// clamp(cfl * min_j h_j^2 / D_j, dt_min, dt_max), with an additional
/// cfl * min|gamma|^2 bound for the lower-order terms.
double adaptive_dt(const FlowState& state, const FlowConfig& config);

/// Emitted output of a run: snapshots at the cadence ticks and matching
/// diagnostics frames (frames[k] summarizes snapshots[k]).
struct Trajectory {
  std::vector<CurveSnapshot> snapshots;
  std::vector<DiagnosticsFrame> frames;
  RunStatus status = RunStatus::running;
  std::size_t steps = 0;
};

struct RunObserver {
  /// Called once a frame is final (after the following step, or at the end).
  std::function<void(const CurveSnapshot&, const DiagnosticsFrame&)> on_frame;
  /// Called on every status change away from running.
  std::function<void(RunStatus)> on_status;
};

/// Steps until t_end, blow-up detection, or resolution exhaustion. When
/// `emit_initial` is false the starting snapshot is assumed already emitted
/// (resume).
Trajectory run(const FlowConfig& config, FlowState state, const RunObserver& observer = {},
               bool emit_initial = true);
Trajectory run(const FlowConfig& config);

}  // namespace equiflow
