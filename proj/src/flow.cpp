#include "equiflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "equiflow/singularity.hpp"

namespace equiflow {

double FlowConfig::reference_time() const {
  if (kernel_T) return *kernel_T;
  if (closed()) return 0.25 * family.circle_radius * family.circle_radius;
  return t_end;
}

FrameSettings FlowConfig::frame_settings() const {
  FrameSettings s;
  s.ray_fractions = ray_fractions;
  s.sector_eps = sector_eps;
  s.area_radii = area_radii;
  s.shrinker_T = reference_time();
  s.drdt_tol = drdt_tol;
  return s;
}

void FlowConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
  if (!closed() && !(beta > 0.0 && beta <= pi)) fail("beta must lie in (0, pi]");
  if (nodes < 16) fail("nodes must be at least 16");
  if (!(cluster >= 0.0 && cluster < 1.0)) fail("cluster must lie in [0, 1)");
  if (!(r_cut > 1.0)) fail("r_cut must exceed 1");
  if (!(half_width > 0.0)) fail("half_width must be positive");
  if (!(cfl_factor > 0.0 && cfl_factor <= 1.0)) fail("cfl_factor must lie in (0, 1]");
  if (!(dt_min > 0.0)) fail("dt_min must be positive");
  if (!(dt_min < dt_max)) fail("dt_min must be below dt_max");
  if (!(t_end > 0.0)) fail("t_end must be positive");
  if (!(min_dist_tol > 0.0)) fail("min_dist_tol must be positive");
  if (!(max_curvature_cap > 0.0)) fail("max_curvature_cap must be positive");
  if (!(regrid_ratio == 0.0 || regrid_ratio > 1.0)) fail("regrid_ratio must be 0 or above 1");
  if (!(regrid_length_tol > 0.0)) fail("regrid_length_tol must be positive");
  if (!(snapshot_dt > 0.0)) fail("snapshot_dt must be positive");
  if (!(snapshot_shrink > 0.0 && snapshot_shrink < 1.0)) fail("snapshot_shrink must lie in (0, 1)");
  if (closed() && !(family.circle_radius > 0.0)) fail("family: circle radius must be positive");
  for (double e : sector_eps)
    if (!(e > 0.0 && e < 0.5 * beta)) fail("sector_eps entries must lie in (0, beta/2)");
  for (double q : ray_fractions)
    if (!(q > 0.0 && q < 1.0)) fail("ray_fractions entries must lie in (0, 1)");
  for (double r : area_radii)
    if (!(r > 0.0)) fail("area_radii entries must be positive");
  if (kernel_T && !(*kernel_T > 0.0)) fail("kernel_T must be positive");
  if (!(drdt_tol >= 0.0)) fail("drdt_tol must be non-negative");
}

std::string_view to_string(RunStatus status) {
  switch (status) {
    case RunStatus::running: return "running";
    case RunStatus::reached_t_end: return "reached_t_end";
    case RunStatus::blowup_detected: return "blowup_detected";
    case RunStatus::resolution_exhausted: return "resolution_exhausted";
  }
  return "unknown";
}

RunStatus run_status_from_string(std::string_view name) {
  for (auto s : {RunStatus::running, RunStatus::reached_t_end, RunStatus::blowup_detected,
                 RunStatus::resolution_exhausted})
    if (to_string(s) == name) return s;
  throw std::invalid_argument("unknown run status '" + std::string(name) + "'");
}

CurveSnapshot initial_snapshot(const FlowConfig& config) {
  if (config.closed()) return circle_profile(config.family.circle_radius, config.nodes);
  const GridPolicy grid{config.nodes, config.cluster};
  if (config.mode == IntegratorMode::graph)
    return initial_profile_graph(config.beta, grid, config.half_width);
  return initial_profile(config.beta, grid, config.r_cut);
}

FlowState initial_state(const FlowConfig& config) {
  config.validate();
  FlowState state;
  state.snapshot = initial_snapshot(config);
  return state;
}

namespace {

std::vector<double> native_values(const CurveSnapshot& snap) {
  std::vector<double> v(snap.size());
  for (std::size_t j = 0; j < v.size(); ++j)
    v[j] = snap.mode == CurveMode::open_graph ? snap.points[j].imag() : std::abs(snap.points[j]);
  return v;
}

// Rebuilds the point list from native values; false on an invalid state.
bool assign_values(CurveSnapshot& snap, const std::vector<double>& v) {
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (!std::isfinite(v[j])) return false;
    if (snap.mode == CurveMode::open_graph) {
      const double x = snap.params[j];
      if (x * x + v[j] * v[j] <= 0.0) return false;
      snap.points[j] = {x, v[j]};
    } else {
      if (!(v[j] > 0.0)) return false;
      snap.points[j] = std::polar(v[j], snap.params[j]);
    }
  }
  return true;
}

}  // namespace

std::vector<double> native_rate(const CurveSnapshot& snap) {
  const std::size_t n = snap.size();
  const auto v = native_values(snap);
  std::vector<double> rate(n, 0.0);
  switch (snap.mode) {
    case CurveMode::open_graph: {
      const auto d = differentiate(snap.params, v);
      for (std::size_t j = 1; j + 1 < n; ++j) {
        const double x = snap.params[j], u = v[j], up = d.d1[j];
        rate[j] = d.d2[j] / (1.0 + up * up) + (x * up - u) / (x * x + u * u);
      }
      break;
    }
    case CurveMode::open_radial:
    case CurveMode::closed_radial: {
      const bool periodic = snap.mode == CurveMode::closed_radial;
      const auto d = differentiate(snap.params, v, periodic, 2.0 * pi);
      const std::size_t lo = periodic ? 0 : 1, hi = periodic ? n : n - 1;
      for (std::size_t j = lo; j < hi; ++j) {
        const double r = v[j], rp = d.d1[j];
        rate[j] = (r * d.d2[j] - 2.0 * r * r - 3.0 * rp * rp) / (r * rp * rp + r * r * r);
      }
      break;
    }
    case CurveMode::polyline:
      throw std::invalid_argument("flow: polyline snapshots cannot be evolved");
  }
  return rate;
}

std::optional<CurveSnapshot> rk4_update(const CurveSnapshot& snap, double dt) {
  const auto v0 = native_values(snap);
  const std::size_t n = v0.size();
  CurveSnapshot work = snap;
  std::vector<double> stage(n), acc(n, 0.0);
  std::vector<double> k = native_rate(snap);
  static constexpr double weight[4] = {1.0, 2.0, 2.0, 1.0};
  static constexpr double offset[3] = {0.5, 0.5, 1.0};
  for (int s = 0; s < 4; ++s) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!std::isfinite(k[j])) return std::nullopt;
      acc[j] += weight[s] * k[j];
    }
    if (s == 3) break;
    for (std::size_t j = 0; j < n; ++j) stage[j] = v0[j] + offset[s] * dt * k[j];
    if (!assign_values(work, stage)) return std::nullopt;
    k = native_rate(work);
  }
  for (std::size_t j = 0; j < n; ++j) stage[j] = v0[j] + dt / 6.0 * acc[j];
  work.t = snap.t + dt;
  if (!assign_values(work, stage)) return std::nullopt;
  return work;
}

namespace {

double raw_dt(const CurveSnapshot& snap, double cfl) {
  const std::size_t n = snap.size();
  const auto v = native_values(snap);
  const bool periodic = snap.mode == CurveMode::closed_radial;
  const auto d = differentiate(snap.params, v, periodic, 2.0 * pi);
  const auto& p = snap.params;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    double h = std::numeric_limits<double>::infinity();
    if (j > 0) h = std::min(h, p[j] - p[j - 1]);
    if (j + 1 < n) h = std::min(h, p[j + 1] - p[j]);
    if (periodic && (j == 0 || j + 1 == n)) h = std::min(h, p[0] + 2.0 * pi - p[n - 1]);
    const double inv_diffusion = snap.mode == CurveMode::open_graph
                                     ? 1.0 + d.d1[j] * d.d1[j]
                                     : d.d1[j] * d.d1[j] + v[j] * v[j];
    best = std::min(best, h * h * inv_diffusion);
  }
  best = std::min(best, std::pow(min_distance(snap), 2));
  return cfl * best;
}

}  // namespace

double adaptive_dt(const FlowState& state, const FlowConfig& config) {
  const double dt = raw_dt(state.snapshot, config.cfl_factor);
  return std::clamp(dt, config.dt_min, config.dt_max);
}

StepStats step(FlowState& state, double dt, const FlowConfig& config) {
  if (state.status != RunStatus::running) throw std::logic_error("step: run already terminated");
  StepStats stats;
  dt = std::clamp(dt, config.dt_min, config.dt_max);
  for (;;) {
    if (auto next = rk4_update(state.snapshot, dt)) {
      state.snapshot = std::move(*next);
      break;
    }
    if (dt <= config.dt_min) {
      state.status = RunStatus::resolution_exhausted;
      stats.dt = dt;
      stats.min_radius = min_distance(state.snapshot);
      return stats;
    }
    dt = std::max(0.5 * dt, config.dt_min);
  }
  ++state.step;
  state.last_dt = dt;
  stats.dt = dt;
  if (config.regrid_ratio > 0.0 && spacing_ratio(state.snapshot) > config.regrid_ratio) {
    try {
      state.snapshot = regrid(state.snapshot, {config.regrid_ratio, config.regrid_length_tol});
      stats.regridded = true;
    } catch (const ResolutionError&) {
      // Keep the unregridded state; the next step decides whether it is resolvable.
    }
  }
  const auto v = velocity(state.snapshot);
  for (const auto& w : v.velocity) stats.max_velocity = std::max(stats.max_velocity, std::abs(w));
  stats.min_radius = min_distance(state.snapshot);
  return stats;
}

namespace {

struct PendingFrame {
  std::optional<CurveSnapshot> prev;
  CurveSnapshot snap;
  DiagnosticsFrame frame;
};

}  // namespace

Trajectory run(const FlowConfig& config, FlowState state, const RunObserver& observer,
               bool emit_initial) {
  config.validate();
  state.snapshot.validate();
  const FrameSettings settings = config.frame_settings();
  const double t_ref = config.reference_time();

  Trajectory traj;
  std::optional<PendingFrame> pending;
  std::optional<CurveSnapshot> last_emitted;
  std::size_t last_emitted_step = 0;
  double m_emitted = min_distance(state.snapshot);
  auto next_tick = static_cast<long long>(std::floor(state.snapshot.t / config.snapshot_dt)) + 1;

  auto set_status = [&](RunStatus s) {
    if (state.status != RunStatus::running) return;
    state.status = s;
    if (observer.on_status) observer.on_status(s);
  };

  auto finalize = [&](const CurveSnapshot* next) {
    if (!pending) return;
    if (next && pending->prev) {
      const auto res = evolution_residuals(*pending->prev, pending->snap, *next, t_ref);
      attach_evolution(pending->frame, res);
    }
    traj.snapshots.push_back(pending->snap);
    traj.frames.push_back(pending->frame);
    state.frames.push_back(pending->frame);
    if (observer.on_frame) observer.on_frame(pending->snap, pending->frame);
    pending.reset();
  };

  auto emit = [&](const std::optional<CurveSnapshot>& prev) {
    const CurveSnapshot& snap = state.snapshot;
    DiagnosticsFrame frame = make_frame(snap, settings);
    if (last_emitted && snap.is_open() && frame.radial_graph) {
      for (std::size_t k = 0; k < settings.sector_eps.size(); ++k) {
        try {
          frame.area_law_residuals[k] =
              area_law_step(*last_emitted, snap, settings.sector_eps[k]).residual;
        } catch (const std::exception&) {
          frame.area_law_residuals[k] = std::nullopt;
        }
      }
    }
    pending = PendingFrame{prev, snap, std::move(frame)};
    last_emitted = snap;
    last_emitted_step = state.step;
    m_emitted = min_distance(snap);
    next_tick = static_cast<long long>(std::floor(snap.t / config.snapshot_dt)) + 1;
  };

  if (emit_initial) {
    emit(std::nullopt);
  } else {
    last_emitted = state.snapshot;
    last_emitted_step = state.step;
  }
  if (detect(state, config)) set_status(RunStatus::blowup_detected);

  while (state.status == RunStatus::running) {
    if (state.snapshot.t >= config.t_end) {
      set_status(RunStatus::reached_t_end);
      break;
    }
    const double raw = raw_dt(state.snapshot, config.cfl_factor);
    state.dt_pinned = raw <= config.dt_min;
    const double dt =
        std::min(std::clamp(raw, config.dt_min, config.dt_max), config.t_end - state.snapshot.t);
    CurveSnapshot prev = state.snapshot;
    step(state, dt, config);
    if (state.status != RunStatus::running) {
      if (observer.on_status) observer.on_status(state.status);
      break;
    }
    finalize(&state.snapshot);

    const bool blowup = detect(state, config).has_value();
    const double t = state.snapshot.t;
    const bool tick = t >= static_cast<double>(next_tick) * config.snapshot_dt;
    const bool shrink = min_distance(state.snapshot) < config.snapshot_shrink * m_emitted;
    const bool done = blowup || t >= config.t_end;
    if (tick || shrink || done) emit(prev);
    if (blowup) set_status(RunStatus::blowup_detected);
    else if (t >= config.t_end) set_status(RunStatus::reached_t_end);
  }
  if (state.step != last_emitted_step) emit(std::nullopt);
  finalize(nullptr);

  traj.status = state.status;
  traj.steps = state.step;
  return traj;
}

Trajectory run(const FlowConfig& config) { return run(config, initial_state(config)); }

}  // namespace equiflow
