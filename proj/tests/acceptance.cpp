// Acceptance suite: one PASS/FAIL line per criterion, tolerances fixed below.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "equiflow/commands.hpp"
#include "equiflow/monitors.hpp"
#include "equiflow/monotonicity.hpp"
#include "equiflow/singularity.hpp"

using namespace equiflow;
namespace fs = std::filesystem;

namespace {

// Criterion tolerances.
constexpr double kTorusTTol = 2.5e-4;
constexpr double kTorusRadiusTol = 1e-4;
constexpr double kStationaryVelocityTol = 1e-4;
constexpr double kOrderRatio = 3.5;
constexpr double kAngleRangeTol = 1e-6;
constexpr double kDrdtTol = 1e-8;
constexpr double kBranchTol = 0.05;
constexpr double kScaleSpreadTol = 0.02;
constexpr double kMonotoneSlack = 1e-8;
constexpr double kTorusDensityTol = 1e-3;
constexpr double kAreaLawTol = 1e-3;
constexpr double kAreaLawExactTol = 1e-6;
constexpr double kSymmetryTol = 1e-8;
constexpr double kMinOrder = 1.8;
constexpr double kCoareaTol = 1e-6;
constexpr double kShrinkerTol = 1e-10;

// Run parameters.
constexpr double kTangentRadius = 0.7;
const std::vector<double> kBranchScales{10.0, 14.142136, 20.0};
const std::vector<double> kShrinkerScales{5.0, 7.0710678, 10.0, 14.142136, 20.0};
const std::vector<std::size_t> kOrderGrids{256, 512, 1024};
constexpr double kOrderWindowStart = 0.05;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

struct NamedRun {
  std::string name;
  FlowConfig config;
  Trajectory traj;
};

FlowConfig cone(double beta, std::size_t nodes, double t_end) {
  FlowConfig c;
  c.beta = beta;
  c.nodes = nodes;
  c.t_end = t_end;
  return c;
}

FlowConfig circle(std::size_t nodes) {
  FlowConfig c;
  c.family.kind = InitialFamily::Kind::circle;
  c.family.circle_radius = 1.0;
  c.nodes = nodes;
  c.t_end = 0.3;
  return c;
}

// Shared trajectories, computed on first use.
class Runs {
 public:
  const NamedRun& get(const std::string& name) {
    auto it = cache_.find(name);
    if (it != cache_.end()) return it->second;
    NamedRun r{name, config(name), {}};
    r.traj = run(r.config);
    return cache_.emplace(name, std::move(r)).first->second;
  }

  static FlowConfig config(const std::string& name) {
    if (name == "circle") return circle(512);
    if (name == "stationary") return cone(pi / 2, 512, 0.5);
    if (name == "expander") return cone(pi / 4, 512, 1.0);
    if (name == "blowup") {
      auto c = cone(3 * pi / 4, 512, 3.0);
      c.cluster = 0.9;
      return c;
    }
    if (name == "area_3pi4" || name == "area_pi") {
      auto c = cone(name == "area_pi" ? pi : 3 * pi / 4, 1024, 3.0);
      c.cluster = 0.7;
      c.min_dist_tol = 0.05;
      return c;
    }
    throw std::invalid_argument("unknown run " + name);
  }

  static std::vector<std::string> all() {
    return {"circle", "stationary", "expander", "blowup", "area_3pi4", "area_pi"};
  }

 private:
  std::map<std::string, NamedRun> cache_;
};

Runs runs;

Outcome torus_oracle() {
  const auto& r = runs.get("circle");
  const auto est = estimate_T(r.traj.snapshots);
  double err = 0.0;
  for (const auto& s : r.traj.snapshots) {
    if (s.t > 0.2) break;
    for (const auto& z : s.points) err = std::max(err, std::abs(std::abs(z) - std::sqrt(1.0 - 4.0 * s.t)));
  }
  const bool pass = std::abs(est.T - 0.25) <= kTorusTTol && err <= kTorusRadiusTol;
  return {pass, "T=" + fmt(est.T) + " |T-0.25|=" + fmt(std::abs(est.T - 0.25)) + " max radius error " + fmt(err)};
}

double sup_interior_velocity(const CurveSnapshot& snap) {
  const auto v = velocity(snap).velocity;
  double sup = 0.0;
  for (std::size_t j = 1; j + 1 < v.size(); ++j) sup = std::max(sup, std::abs(v[j]));
  return sup;
}

Outcome special_lagrangian_fixed_point() {
  auto c = cone(pi / 2, 512, 10.0);
  auto coarse = initial_state(c);
  for (int k = 0; k < 1000; ++k) step(coarse, adaptive_dt(coarse, c), c);
  // The refined grid is compared at the same flow time, since the residual velocity decays in t.
  c.nodes = 1024;
  auto fine = initial_state(c);
  while (fine.snapshot.t < coarse.snapshot.t)
    step(fine, std::min(adaptive_dt(fine, c), coarse.snapshot.t - fine.snapshot.t), c);
  const double a = sup_interior_velocity(coarse.snapshot), b = sup_interior_velocity(fine.snapshot);
  const bool pass = a <= kStationaryVelocityTol && a / b >= kOrderRatio;
  return {pass, "at t=" + fmt(coarse.snapshot.t) + " sup|v| N=512 " + fmt(a) + ", N=1024 " + fmt(b) +
                    ", ratio " + fmt(a / b)};
}

Outcome finite_time_singularity() {
  const auto& r = runs.get("blowup");
  const double beta = r.config.beta;
  const auto& last = r.traj.snapshots.back();
  const auto z = world_points(last);
  std::size_t arg_min = 0;
  double nearest = 1e300;
  for (std::size_t j = 0; j < z.size(); ++j) {
    if (std::abs(z[j]) < std::abs(z[arg_min])) arg_min = j;
    nearest = std::min(nearest, std::abs(std::arg(z[j]) - beta / 2));
  }
  const bool at_origin = std::abs(z[arg_min]) < r.config.min_dist_tol;
  const bool on_bisector = std::abs(std::arg(z[arg_min]) - beta / 2) <= nearest + 1e-12;
  double range_violation = 0.0, drdt = -1e300;
  for (const auto& s : r.traj.snapshots) {
    const auto th = lagrangian_angle(s);
    for (double x : th) range_violation = std::max({range_violation, pi - x, x - 2 * beta});
    drdt = std::max(drdt, shape_checks(s).max_drdt);
  }
  const bool pass = r.traj.status == RunStatus::blowup_detected && at_origin && on_bisector &&
                    range_violation <= kAngleRangeTol && drdt <= kDrdtTol;
  return {pass, "status " + std::string(to_string(r.traj.status)) + " at t=" + fmt(last.t) + ", |x|=" +
                    fmt(std::abs(z[arg_min])) + (on_bisector ? " on" : " off") +
                    " bisector, angle range violation " + fmt(range_violation) + ", max dr/dt " + fmt(drdt)};
}

SingularityReport blowup_report(const std::vector<double>& scales) {
  const auto& r = runs.get("blowup");
  const auto est = estimate_T(r.traj.snapshots);
  const auto seq = extract_rescaled_sequence(r.traj.snapshots, 0.0, est.T, scales);
  return tangent_flow_report(seq, kTangentRadius);
}

Outcome tangent_flow_branches() {
  const auto rep = blowup_report(kBranchScales);
  bool two = true;
  std::string angles;
  for (const auto& s : rep.scales) {
    two = two && s.branches.size() == 2 && !s.ambiguous;
    for (const auto& b : s.branches) angles += " " + fmt(b.mean_angle);
  }
  const bool pass = two && rep.max_branch_deviation <= kBranchTol && rep.scale_spread <= kScaleSpreadTol;
  return {pass, "angles" + angles + ", max deviation from 5pi/4 " + fmt(rep.max_branch_deviation) +
                    ", scale spread " + fmt(rep.scale_spread) + "; beta/2 = " + fmt(rep.theorem_target) +
                    " is off by " + fmt(std::abs(rep.proof_target - rep.theorem_target))};
}

// Largest step-to-step increase beyond the error bars of both neighbours.
struct MonotoneCheck {
  double worst_excess = -1e300;
  void add(const DensityValue& prev, const DensityValue& cur) {
    const double bar = prev.error + cur.error + prev.tail + cur.tail;
    worst_excess = std::max(worst_excess, cur.value - prev.value - bar);
  }
};

Outcome huisken_monotonicity() {
  double worst = -1e300;
  std::string detail;
  for (const auto& name : Runs::all()) {
    const auto& r = runs.get(name);
    const double T = r.traj.status == RunStatus::blowup_detected ? estimate_T(r.traj.snapshots).hi
                                                                 : r.config.t_end + 1.0;
    const KernelSpec k{{}, T};
    MonotoneCheck dens, mom;
    std::optional<DensityValue> pd, pm;
    for (const auto& s : r.traj.snapshots) {
      if (!(s.t < T)) continue;
      const auto d = gaussian_density(s, k);
      const auto m = weighted_theta_moment(s, 1, pi, k);
      if (pd) dens.add(*pd, d);
      if (pm) mom.add(*pm, m);
      pd = d;
      pm = m;
    }
    worst = std::max({worst, dens.worst_excess, mom.worst_excess});
    detail += name + " " + fmt(std::max(dens.worst_excess, mom.worst_excess)) + "; ";
  }
  const auto& c = runs.get("circle");
  const double torus = 4 * pi / std::exp(1.0);
  double lo = 1e300, hi = -1e300;
  for (const auto& s : c.traj.snapshots) {
    const double d = gaussian_density(s, {{}, 0.25}).value;
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  const double off = std::max(std::abs(lo - torus), std::abs(hi - torus));
  const bool pass = worst <= kMonotoneSlack && off <= kTorusDensityTol && hi - lo <= kTorusDensityTol;
  return {pass, "worst increase beyond error bar: " + detail + "torus density in [" + fmt(lo) + ", " +
                    fmt(hi) + "], 4pi/e=" + fmt(torus)};
}

Outcome area_law() {
  double worst_residual = 0.0;
  bool bound = true, range_bound = true;
  std::string detail;
  for (const char* name : {"area_3pi4", "area_pi"}) {
    const auto& r = runs.get(name);
    double first_violation = -1.0;
    for (double eps : r.config.sector_eps)
      for (const auto& s : area_law_residual(r.traj.snapshots, eps)) {
        worst_residual = std::max(worst_residual, s.residual);
        if (!s.bound_holds && (first_violation < 0.0 || s.t0 < first_violation)) first_violation = s.t0;
        bound = bound && s.bound_holds;
        range_bound = range_bound && s.range_bound_holds;
      }
    detail += std::string(name) + (first_violation < 0.0 ? " bound holds" : " bound fails from t=" + fmt(first_violation)) + "; ";
  }
  double exact = 0.0;
  const auto& initial = runs.get("area_pi").traj.snapshots.front();
  for (double eps : {0.2, 0.3}) exact = std::max(exact, std::abs(angle_gap(initial, eps) - (2 * eps - pi)));
  const bool pass = worst_residual <= kAreaLawTol && bound && exact <= kAreaLawExactTol;
  return {pass, "max residual " + fmt(worst_residual) + "; " + detail + "pi+4eps-2beta bound " +
                    (range_bound ? "holds" : "fails") + "; t=0 beta=pi gap error " + fmt(exact)};
}

Outcome sturmian_and_shape() {
  int bad_counts = 0, bad_critical = 0;
  double symmetry = 0.0;
  for (const auto& name : Runs::all()) {
    const auto& r = runs.get(name);
    if (r.config.closed()) continue;
    for (const auto& s : r.traj.snapshots) {
      for (double f : {0.25, 0.5, 0.75}) bad_counts += sturmian_count(s, f * s.beta).count != 1;
      const auto sc = shape_checks(s);
      bad_critical += sc.critical_points != 1;
      symmetry = std::max(symmetry, sc.symmetry_residual);
    }
  }
  const bool pass = bad_counts == 0 && bad_critical == 0 && symmetry <= kSymmetryTol;
  return {pass, "frames with count != 1: " + std::to_string(bad_counts) + ", critical-point failures: " +
                    std::to_string(bad_critical) + ", max symmetry residual " + fmt(symmetry)};
}

Outcome evolution_orders() {
  std::vector<std::array<double, 4>> worst;
  for (std::size_t n : kOrderGrids) {
    auto c = cone(3 * pi / 4, n, 0.5);
    // Frame spacing shrinks like h^2 so time differencing stays below the spatial error.
    const double ratio = static_cast<double>(kOrderGrids.front()) / static_cast<double>(n);
    c.snapshot_dt = 0.005 * ratio * ratio;
    const auto traj = run(c);
    std::array<double, 4> w{};
    for (const auto& r : evolution_residuals(traj.snapshots, 0.0)) {
      if (!r.reported || r.t < kOrderWindowStart) continue;
      const std::array<double, 4> v{r.theta_heat, r.beta_heat, r.radial_law, r.cosine};
      for (std::size_t k = 0; k < 4; ++k) w[k] = std::max(w[k], v[k]);
    }
    worst.push_back(w);
  }
  bool pass = true;
  std::string detail;
  const char* names[4] = {"theta_heat", "beta_heat", "radial_law", "cosine"};
  for (std::size_t k = 0; k < 4; ++k) {
    detail += std::string(names[k]) + " orders";
    for (std::size_t g = 1; g < worst.size(); ++g) {
      const double order = std::log2(worst[g - 1][k] / worst[g][k]);
      pass = pass && order >= kMinOrder;
      detail += " " + fmt(order);
    }
    detail += "; ";
  }
  return {pass, detail};
}

Outcome coarea() {
  double worst = 0.0;
  for (const auto& name : Runs::all())
    for (const auto& s : runs.get(name).traj.snapshots) worst = std::max(worst, coarea_check(s).residual);
  return {worst <= kCoareaTol, "max residual " + fmt(worst)};
}

Outcome shrinker() {
  double circle_res = shrinker_identity(runs.get("circle").traj.snapshots.front(), 0.25);
  for (double t : {0.05, 0.1, 0.2, 0.24}) {
    auto c = circle_profile(std::sqrt(1.0 - 4.0 * t), 512);
    c.t = t;
    circle_res = std::max(circle_res, shrinker_identity(c, 0.25));
  }
  const auto rep = blowup_report(kShrinkerScales);
  bool decreasing = true;
  std::string seq;
  for (std::size_t k = 0; k < rep.scales.size(); ++k) {
    seq += " " + fmt(rep.scales[k].shrinker_residual);
    if (k > 0) decreasing = decreasing && rep.scales[k].shrinker_residual < rep.scales[k - 1].shrinker_residual;
  }
  return {circle_res <= kShrinkerTol && decreasing,
          "circle " + fmt(circle_res) + ", rescaled residuals" + seq};
}

Outcome expander() {
  const auto& r = runs.get("expander");
  bool increasing = true;
  for (std::size_t k = 1; k < r.traj.frames.size(); ++k)
    increasing = increasing && r.traj.frames[k].min_dist > r.traj.frames[k - 1].min_dist;
  const bool pass = increasing && r.traj.status == RunStatus::reached_t_end;
  return {pass, "status " + std::string(to_string(r.traj.status)) + ", min|gamma| " +
                    fmt(r.traj.frames.front().min_dist) + " -> " + fmt(r.traj.frames.back().min_dist)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "equiflow_acceptance_determinism";
  fs::remove_all(root);
  std::size_t files = 0, mismatched = 0;
  for (const auto& config : {circle(256), cone(3 * pi / 4, 256, 0.3)}) {
    const fs::path a = root / "a", b = root / "b";
    cmd_run(config, a);
    cmd_run(config, b);
    for (const auto& e : fs::recursive_directory_iterator(a)) {
      if (!e.is_regular_file()) continue;
      const auto rel = fs::relative(e.path(), a);
      if (rel == "timings.log") continue;
      ++files;
      mismatched += !fs::exists(b / rel) || slurp(e.path()) != slurp(b / rel);
    }
    fs::remove_all(root);
  }
  return {files > 0 && mismatched == 0,
          std::to_string(files) + " files compared, " + std::to_string(mismatched) + " differ"};
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, torus_oracle},   {2, special_lagrangian_fixed_point},
      {3, finite_time_singularity}, {4, tangent_flow_branches},
      {5, huisken_monotonicity},    {6, area_law},
      {7, sturmian_and_shape},      {8, evolution_orders},
      {9, coarea},         {10, shrinker},
      {11, expander},      {12, determinism}};
  int failed = 0;
  for (const auto& [id, check] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !o.pass;
    std::printf("criterion %2d: %s  %s  (%.1f s)\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return 0;
}
