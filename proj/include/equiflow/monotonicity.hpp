#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "equiflow/geometry.hpp"

namespace equiflow {

/// Backward heat kernel (4 pi (T - t))^{-1} exp(-|x - x0|^2 / (4 (T - t)))
/// on C^2, centered at x0 with reference time T.
struct KernelSpec {
  std::array<cplx, 2> center{};
  double T = 0.0;

  bool at_origin() const { return center[0] == cplx{} && center[1] == cplx{}; }
};

/// Kernel-weighted integral over the rotation surface with its error bar.
/// `tail` bounds the contribution of the two planar ends beyond the cutoff
/// (open profiles only); the true value lies in [value, value + tail] up to
/// `error`.
struct DensityValue {
  double value = 0.0;
  double error = 0.0;
  double tail = 0.0;
  std::vector<double> refinement;  // estimates on successively refined grids
};

inline constexpr double kDensityTolerance = 1e-10;

/// Gaussian density: integral of the kernel over the surface, computed as
/// 2 pi times the profile integral for kernels centered on the origin.
DensityValue gaussian_density(const CurveSnapshot& snap, const KernelSpec& kernel);

/// Integral of (theta - y)^{2q} times the kernel.
DensityValue weighted_theta_moment(const CurveSnapshot& snap, int q, double y,
                                   const KernelSpec& kernel);

/// Integral of |H - (x - x0)_perp / (2 (t - T))|^2 times the kernel.
DensityValue huisken_defect(const CurveSnapshot& snap, const KernelSpec& kernel);

/// Integral of |H|^2 + |x_perp|^2 over the part of the surface inside the
/// ball of the given radius about the origin.
double dissipation_in_ball(const CurveSnapshot& snap, double radius);

/// x -> sigma (x - x0) in the profile plane with time tau = sigma^2 (t - T).
/// The mode is preserved for x0 = 0; otherwise a polyline is returned.
CurveSnapshot rescale(const CurveSnapshot& snap, double sigma, cplx x0, double T);

struct RescaledMember {
  double sigma = 1.0;
  double tau = -1.0;
  CurveSnapshot snapshot;
  bool interpolated = false;  // built from two bracketing frames
  double error_bound = 0.0;   // pointwise bound on the time interpolation error
};

struct RescaledSequence {
  cplx x0{};
  double T = 0.0;
  std::vector<RescaledMember> members;  // increasing sigma
};

/// Members at times T + tau / sigma^2, by linear interpolation between the
/// bracketing frames when they share a grid, otherwise the nearest frame.
RescaledSequence extract_rescaled_sequence(std::span<const CurveSnapshot> traj, cplx x0, double T,
                                           std::span<const double> scales, double tau = -1.0);

}  // namespace equiflow
