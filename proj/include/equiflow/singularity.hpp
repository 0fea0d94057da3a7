#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "equiflow/flow.hpp"
#include "equiflow/monotonicity.hpp"

namespace equiflow {

struct BlowupEvent {
  double t = 0.0;
  cplx location{};
  std::size_t node = 0;  // traversal index of the node closest to the origin
  std::string trigger;   // "min_dist", "curvature" or "dt_min"
};

std::optional<BlowupEvent> detect(const FlowState& state, const FlowConfig& config);

struct TimeEstimate {
  double T = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double slope = 0.0;      // d(m^2)/dt of the fit
  double residual = 0.0;   // max |fit - m^2| on the window
  std::size_t samples = 0;
};

/// Linear fit of min|gamma|^2 against t on the trailing `window` frames.
TimeEstimate estimate_T(std::span<const CurveSnapshot> traj, std::size_t window = 8);

struct Branch {
  cplx direction{};         // unit vector of the length-weighted mean point
  int multiplicity = 1;
  double mean_angle = 0.0;  // length-weighted mean Lagrangian angle
  double angle_std = 0.0;
  double length = 0.0;
  double polar_lo = 0.0;
  double polar_hi = 0.0;
};

struct ScaleBranches {
  double sigma = 0.0;
  std::vector<Branch> branches;
  double concentration = 0.0;  // length-weighted angle std inside B_R
  double dissipation = 0.0;    // integral of |H|^2 + |x_perp|^2 inside B_R
  double shrinker_residual = 0.0;  // shrinker identity inside B_R, singular time 0
  bool ambiguous = false;
};

struct DensityRatioSample {
  double delta = 0.0;
  double ratio = 0.0;
  double t = 0.0;
};

struct SingularityReport {
  double T = 0.0;
  double T_lo = 0.0;
  double T_hi = 0.0;
  cplx x0{};
  double radius = 1.0;
  std::vector<Branch> branches;       // largest-scale member
  std::vector<ScaleBranches> scales;  // every member, increasing sigma
  double concentration = 0.0;
  std::vector<double> histogram_edges;
  std::vector<double> histogram;      // length-weighted, normalized to total 1
  double component_range = 0.0;       // max over components of range(beta + 2 tau theta)
  double proof_target = 0.0;          // pi/2 + beta
  double theorem_target = 0.0;        // beta/2
  double max_branch_deviation = 0.0;  // from proof_target, over branches and scales
  double scale_spread = 0.0;          // max over branches of the angle range across scales
  bool closed_control = false;        // closed (non-zero-Maslov) input
  bool ambiguous = false;
  std::string note;
  std::vector<DensityRatioSample> density_ratios;
};

/// Branch analysis of the annulus R/2 <= |x| <= R. Nodes are split into
/// branches at polar-angle gaps larger than `gap_factor` times the median gap.
SingularityReport tangent_flow_report(const RescaledSequence& seq, double radius,
                                      double gap_factor = 10.0, std::size_t histogram_bins = 32);

/// Length of the curve inside B_delta(x0) divided by 2 delta. With
/// `include_reflection` the slice also contains -gamma, the other half of the
/// surface's intersection with the profile plane.
double density_ratio(const CurveSnapshot& snap, cplx x0, double delta,
                     bool include_reflection = true);

}  // namespace equiflow
