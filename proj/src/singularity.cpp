#include "equiflow/singularity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace equiflow {

namespace {

// Largest accepted distance from the last sample to the fitted root, in window spans.
constexpr double kMaxExtrapolation = 10.0;

}  // namespace

std::optional<BlowupEvent> detect(const FlowState& state, const FlowConfig& config) {
  const auto z = world_points(state.snapshot);
  std::size_t arg_min = 0;
  for (std::size_t j = 1; j < z.size(); ++j)
    if (std::abs(z[j]) < std::abs(z[arg_min])) arg_min = j;
  BlowupEvent ev;
  ev.t = state.snapshot.t;
  ev.location = z[arg_min];
  ev.node = arg_min;
  if (std::abs(z[arg_min]) < config.min_dist_tol) {
    ev.trigger = "min_dist";
    return ev;
  }
  if (max_curvature(state.snapshot) > config.max_curvature_cap) {
    ev.trigger = "curvature";
    return ev;
  }
  if (state.dt_pinned) {
    ev.trigger = "dt_min";
    return ev;
  }
  return std::nullopt;
}

TimeEstimate estimate_T(std::span<const CurveSnapshot> traj, std::size_t window) {
  if (window < 3) throw std::invalid_argument("estimate_T: window must hold at least 3 frames");
  std::vector<double> t, m2;
  for (std::size_t k = traj.size(); k-- > 0 && t.size() < window;) {
    if (!t.empty() && !(traj[k].t < t.back())) continue;
    const double m = min_distance(traj[k]);
    t.push_back(traj[k].t);
    m2.push_back(m * m);
  }
  if (t.size() < 3) throw std::invalid_argument("estimate_T: insufficient trailing samples");
  std::reverse(t.begin(), t.end());
  std::reverse(m2.begin(), m2.end());
  const LineFit fit = fit_line(t, m2);
  if (!(fit.slope < 0.0))
    throw std::invalid_argument("estimate_T: min|gamma| is not shrinking; no blow-up trend");
  TimeEstimate est;
  est.samples = t.size();
  est.slope = fit.slope;
  est.residual = fit.max_abs_residual;
  est.lo = t.back();
  est.T = std::max(-fit.intercept / fit.slope, est.lo);
  est.hi = est.T + fit.max_abs_residual / std::abs(fit.slope);
  if (est.T - est.lo > kMaxExtrapolation * (t.back() - t.front()))
    throw std::invalid_argument("estimate_T: root lies far beyond the window; no blow-up trend");
  return est;
}

namespace {

constexpr double kMinBranchGap = 1e-6;

struct NodeData {
  std::vector<cplx> z;
  std::vector<double> theta;
  std::vector<double> weight;  // arclength attached to each node
  std::vector<double> primitive;
};

NodeData node_data(const CurveSnapshot& snap) {
  const CurveFrame f = curve_frame(snap);
  NodeData d;
  d.z = f.z;
  d.theta = lagrangian_angle(f);
  d.primitive = liouville_primitive(f).values;
  const std::size_t n = f.size();
  d.weight.assign(n, 0.0);
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const double len = std::abs(f.z[j + 1] - f.z[j]);
    d.weight[j] += 0.5 * len;
    d.weight[j + 1] += 0.5 * len;
  }
  if (f.periodic) {
    const double len = std::abs(f.z[0] - f.z[n - 1]);
    d.weight[0] += 0.5 * len;
    d.weight[n - 1] += 0.5 * len;
  }
  return d;
}

double weighted_std(const std::vector<double>& v, const std::vector<double>& w) {
  double sw = 0.0, mean = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    sw += w[k];
    mean += w[k] * v[k];
  }
  if (sw == 0.0) return 0.0;
  mean /= sw;
  double var = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) var += w[k] * (v[k] - mean) * (v[k] - mean);
  return std::sqrt(var / sw);
}

ScaleBranches analyze_member(const NodeData& d, double sigma, double radius, double gap_factor) {
  ScaleBranches sb;
  sb.sigma = sigma;
  std::vector<std::size_t> idx;
  std::vector<double> ball_theta, ball_w;
  for (std::size_t j = 0; j < d.z.size(); ++j) {
    const double r = std::abs(d.z[j]);
    if (r <= radius) {
      ball_theta.push_back(d.theta[j]);
      ball_w.push_back(d.weight[j]);
    }
    if (r >= 0.5 * radius && r <= radius) idx.push_back(j);
  }
  sb.concentration = weighted_std(ball_theta, ball_w);
  if (idx.empty()) {
    sb.ambiguous = true;
    return sb;
  }
  std::vector<std::pair<double, std::size_t>> polar;
  for (std::size_t j : idx) polar.emplace_back(wrap_angle(std::arg(d.z[j]), -pi), j);
  std::sort(polar.begin(), polar.end());
  const std::size_t m = polar.size();
  std::vector<double> gaps(m);
  for (std::size_t k = 0; k + 1 < m; ++k) gaps[k] = polar[k + 1].first - polar[k].first;
  gaps[m - 1] = polar[0].first + 2.0 * pi - polar[m - 1].first;  // wrap-around gap
  std::vector<double> sorted_gaps(gaps);
  std::nth_element(sorted_gaps.begin(), sorted_gaps.begin() + static_cast<std::ptrdiff_t>(m / 2),
                   sorted_gaps.end());
  const double med = sorted_gaps[m / 2];
  if (m < 3) {
    sb.ambiguous = true;
    return sb;
  }
  // Exact rays have zero gaps inside a branch; fall back to an absolute split angle.
  const double split = std::max(gap_factor * med, kMinBranchGap);
  // Clusters start after each large gap; rotate so the first cluster starts after a split.
  std::vector<std::size_t> starts;
  for (std::size_t k = 0; k < m; ++k)
    if (gaps[k] > split) starts.push_back((k + 1) % m);
  if (starts.empty()) starts.push_back(0);
  std::sort(starts.begin(), starts.end());
  for (std::size_t c = 0; c < starts.size(); ++c) {
    const std::size_t begin = starts[c];
    const std::size_t end = c + 1 < starts.size() ? starts[c + 1] : starts[0] + m;
    Branch b;
    std::vector<double> th, w;
    cplx centroid{};
    std::vector<std::size_t> members;
    for (std::size_t k = begin; k < end; ++k) {
      const auto [angle, j] = polar[k % m];
      th.push_back(d.theta[j]);
      w.push_back(d.weight[j]);
      centroid += d.weight[j] * d.z[j];
      members.push_back(j);
    }
    b.polar_lo = polar[begin % m].first;
    b.polar_hi = polar[(end - 1) % m].first;
    for (double x : w) b.length += x;
    double mean = 0.0;
    for (std::size_t k = 0; k < th.size(); ++k) mean += w[k] * th[k];
    b.mean_angle = b.length > 0.0 ? mean / b.length : 0.0;
    b.angle_std = weighted_std(th, w);
    b.direction = std::abs(centroid) > 0.0 ? centroid / std::abs(centroid) : cplx{};
    std::sort(members.begin(), members.end());
    b.multiplicity = 1;
    for (std::size_t k = 1; k < members.size(); ++k)
      if (members[k] != members[k - 1] + 1) ++b.multiplicity;
    if (th.size() < 3) sb.ambiguous = true;
    sb.branches.push_back(b);
  }
  std::sort(sb.branches.begin(), sb.branches.end(),
            [](const Branch& a, const Branch& b) { return a.polar_lo < b.polar_lo; });
  return sb;
}

}  // namespace

SingularityReport tangent_flow_report(const RescaledSequence& seq, double radius, double gap_factor,
                                      std::size_t histogram_bins) {
  if (seq.members.empty()) throw std::invalid_argument("tangent_flow_report: empty sequence");
  if (!(radius > 0.0)) throw std::invalid_argument("tangent_flow_report: radius must be positive");
  if (histogram_bins == 0) throw std::invalid_argument("tangent_flow_report: need histogram bins");
  SingularityReport rep;
  rep.T = rep.T_lo = rep.T_hi = seq.T;
  rep.x0 = seq.x0;
  rep.radius = radius;
  const CurveSnapshot& last = seq.members.back().snapshot;
  rep.closed_control = !last.is_open();
  rep.proof_target = 0.5 * pi + last.beta;
  rep.theorem_target = 0.5 * last.beta;

  NodeData last_data;
  for (const auto& member : seq.members) {
    NodeData d = node_data(member.snapshot);
    ScaleBranches sb = analyze_member(d, member.sigma, radius, gap_factor);
    sb.dissipation = dissipation_in_ball(member.snapshot, radius);
    sb.shrinker_residual = shrinker_identity(member.snapshot, 0.0, radius);
    rep.scales.push_back(std::move(sb));
    last_data = std::move(d);
  }
  const ScaleBranches& top = rep.scales.back();
  if (top.branches.empty() && top.ambiguous) {
    bool any = false;
    for (const auto& z : last_data.z) {
      const double r = std::abs(z);
      any = any || (r >= 0.5 * radius && r <= radius);
    }
    if (!any) throw std::invalid_argument("tangent_flow_report: no nodes in the annulus");
  }
  rep.branches = top.branches;
  rep.concentration = top.concentration;
  for (const auto& s : rep.scales) rep.ambiguous = rep.ambiguous || s.ambiguous;

  // Branch angles across scales, matched in polar order.
  bool counts_agree = true;
  for (const auto& s : rep.scales) counts_agree = counts_agree && s.branches.size() == top.branches.size();
  if (!counts_agree) {
    rep.ambiguous = true;
    rep.note = "branch count differs between scales";
  }
  for (const auto& s : rep.scales)
    for (const auto& b : s.branches)
      rep.max_branch_deviation = std::max(rep.max_branch_deviation, std::abs(b.mean_angle - rep.proof_target));
  if (counts_agree) {
    for (std::size_t b = 0; b < top.branches.size(); ++b) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (const auto& s : rep.scales) {
        lo = std::min(lo, s.branches[b].mean_angle);
        hi = std::max(hi, s.branches[b].mean_angle);
      }
      rep.scale_spread = std::max(rep.scale_spread, hi - lo);
    }
  }

  // Length-weighted histogram of theta inside B_R and component constancy of
  // beta + 2 tau theta on the largest scale.
  const double tau = seq.members.back().tau;
  std::vector<double> th, w;
  double cur_lo = 0.0, cur_hi = 0.0;
  bool in_component = false;
  for (std::size_t j = 0; j < last_data.z.size(); ++j) {
    if (std::abs(last_data.z[j]) > radius) {
      if (in_component) rep.component_range = std::max(rep.component_range, cur_hi - cur_lo);
      in_component = false;
      continue;
    }
    th.push_back(last_data.theta[j]);
    w.push_back(last_data.weight[j]);
    const double psi = last_data.primitive[j] + 2.0 * tau * last_data.theta[j];
    if (!in_component) {
      cur_lo = cur_hi = psi;
      in_component = true;
    } else {
      cur_lo = std::min(cur_lo, psi);
      cur_hi = std::max(cur_hi, psi);
    }
  }
  if (in_component) rep.component_range = std::max(rep.component_range, cur_hi - cur_lo);
  if (!th.empty()) {
    double lo = *std::min_element(th.begin(), th.end());
    double hi = *std::max_element(th.begin(), th.end());
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
    rep.histogram_edges.resize(histogram_bins + 1);
    for (std::size_t k = 0; k <= histogram_bins; ++k)
      rep.histogram_edges[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(histogram_bins);
    rep.histogram.assign(histogram_bins, 0.0);
    double total = 0.0;
    for (std::size_t k = 0; k < th.size(); ++k) {
      auto bin = static_cast<std::size_t>((th[k] - lo) / (hi - lo) * static_cast<double>(histogram_bins));
      bin = std::min(bin, histogram_bins - 1);
      rep.histogram[bin] += w[k];
      total += w[k];
    }
    if (total > 0.0)
      for (auto& h : rep.histogram) h /= total;
  }
  return rep;
}

namespace {

double clipped_length(cplx a, cplx b, cplx c, double rho) {
  const cplx d = b - a;
  const double qa = std::norm(d);
  if (qa == 0.0) return 0.0;
  const cplx e = a - c;
  const double qb = 2.0 * (e.real() * d.real() + e.imag() * d.imag());
  const double qc = std::norm(e) - rho * rho;
  const double disc = qb * qb - 4.0 * qa * qc;
  if (disc <= 0.0) return 0.0;
  const double sq = std::sqrt(disc);
  const double s0 = std::max(0.0, (-qb - sq) / (2.0 * qa));
  const double s1 = std::min(1.0, (-qb + sq) / (2.0 * qa));
  return s1 > s0 ? (s1 - s0) * std::sqrt(qa) : 0.0;
}

}  // namespace

double density_ratio(const CurveSnapshot& snap, cplx x0, double delta, bool include_reflection) {
  if (!(delta > 0.0)) throw std::invalid_argument("density_ratio: delta must be positive");
  auto z = world_points(snap);
  if (!snap.is_open()) z.push_back(z.front());
  double len = 0.0;
  for (std::size_t j = 0; j + 1 < z.size(); ++j) {
    len += clipped_length(z[j], z[j + 1], x0, delta);
    if (include_reflection) len += clipped_length(-z[j], -z[j + 1], x0, delta);
  }
  return len / (2.0 * delta);
}

}  // namespace equiflow
