#include <doctest.h>

#include <cmath>

#include "equiflow/singularity.hpp"

using namespace equiflow;

namespace {

FlowConfig circle_config(std::size_t nodes) {
  FlowConfig c;
  c.family.kind = InitialFamily::Kind::circle;
  c.family.circle_radius = 1.0;
  c.nodes = nodes;
  c.t_end = 0.3;
  return c;
}

FlowConfig cone_config(std::size_t nodes) {
  FlowConfig c;
  c.nodes = nodes;
  c.cluster = 0.8;
  c.t_end = 5.0;
  c.min_dist_tol = 0.05;
  return c;
}

// Step until the detector fires or the run stops.
std::optional<BlowupEvent> drive(FlowState& state, const FlowConfig& config) {
  while (state.status == RunStatus::running && state.snapshot.t < config.t_end) {
    if (auto ev = detect(state, config)) return ev;
    step(state, std::min(adaptive_dt(state, config), config.t_end - state.snapshot.t), config);
  }
  return detect(state, config);
}

// Straight line through the origin, perpendicular to the bisector (world direction 3pi/4).
CurveSnapshot line_graph(std::size_t n, double half_width) {
  auto s = initial_profile_graph(pi / 2, {n, 0.0}, half_width);
  for (auto& z : s.points) z = {z.real(), 0.0};
  return s;
}

RescaledSequence static_sequence(const CurveSnapshot& snap, std::initializer_list<double> scales) {
  RescaledSequence seq;
  for (double sigma : scales) {
    RescaledMember m;
    m.sigma = sigma;
    m.snapshot = snap;
    m.snapshot.t = -1.0;
    seq.members.push_back(m);
  }
  return seq;
}

}  // namespace

TEST_CASE("detector fires near the exact circle blow-up time at the origin") {
  const auto c = circle_config(256);
  auto state = initial_state(c);
  const auto ev = drive(state, c);
  REQUIRE(ev.has_value());
  CHECK(ev->trigger == "min_dist");
  CHECK(ev->t > 0.24);
  CHECK(ev->t < 0.25);
  CHECK(std::abs(ev->location) < c.min_dist_tol);
}

TEST_CASE("detector stays silent in the expander regime") {
  FlowConfig c;
  c.beta = pi / 4;
  c.nodes = 128;
  c.t_end = 0.5;
  auto state = initial_state(c);
  CHECK_FALSE(drive(state, c).has_value());
  CHECK(state.snapshot.t == doctest::Approx(0.5));
}

TEST_CASE("detector locates the cone-angle 3pi/4 blow-up on the bisector") {
  const auto c = cone_config(128);
  auto state = initial_state(c);
  const auto ev = drive(state, c);
  REQUIRE(ev.has_value());
  CHECK(std::abs(ev->location) < c.min_dist_tol);
  // The arg-min node is one of the two nodes flanking the bisector.
  const auto z = world_points(state.snapshot);
  REQUIRE(ev->node > 0);
  REQUIRE(ev->node + 1 < z.size());
  const bool left = std::arg(z[ev->node]) <= c.beta / 2 && std::arg(z[ev->node + 1]) >= c.beta / 2;
  const bool right = std::arg(z[ev->node - 1]) <= c.beta / 2 && std::arg(z[ev->node]) >= c.beta / 2;
  CHECK((left || right));
}

TEST_CASE("singular time of the circle is recovered") {
  const auto traj = run(circle_config(512));
  const auto est = estimate_T(traj.snapshots);
  CHECK(std::abs(est.T - 0.25) / 0.25 < 1e-3);
  CHECK(est.lo <= 0.25);
  CHECK(est.hi >= 0.25 - 1e-6);
  CHECK(est.slope == doctest::Approx(-4.0).epsilon(1e-2));
  CHECK(est.samples == 8);
}

TEST_CASE("singular time estimate rejects a non-shrinking trajectory") {
  FlowConfig c;
  c.beta = pi / 2;
  c.nodes = 128;
  c.t_end = 0.1;
  const auto traj = run(c);
  CHECK_THROWS_AS(estimate_T(traj.snapshots), std::invalid_argument);
  CHECK_THROWS_AS(estimate_T(traj.snapshots, 2), std::invalid_argument);
  CHECK_THROWS_AS(estimate_T(std::span(traj.snapshots).first(2)), std::invalid_argument);
}

TEST_CASE("singular time brackets overlap under grid refinement") {
  const auto coarse = estimate_T(run(cone_config(128)).snapshots);
  const auto fine = estimate_T(run(cone_config(256)).snapshots);
  CHECK(coarse.lo <= coarse.T);
  CHECK(coarse.T <= coarse.hi);
  const double gap = std::max(coarse.lo, fine.lo) - std::min(coarse.hi, fine.hi);
  CHECK(gap <= 0.0);
}

TEST_CASE("a rescaled plane gives one branch pair at angle 2 alpha with zero spread") {
  const auto seq = static_sequence(line_graph(400, 10.0), {2.0, 4.0, 8.0});
  const auto rep = tangent_flow_report(seq, 1.0);
  REQUIRE(rep.branches.size() == 2);
  CHECK_FALSE(rep.ambiguous);
  for (const auto& b : rep.branches) {
    CHECK(std::abs(std::remainder(b.mean_angle - 3 * pi / 2, pi)) < 1e-12);
    CHECK(b.angle_std < 1e-12);
    CHECK(std::abs(std::remainder(std::arg(b.direction) - 3 * pi / 4, pi)) < 1e-12);
  }
  CHECK(rep.scale_spread < 1e-12);
  CHECK(rep.concentration < 1e-12 + pi / 2);
  CHECK_FALSE(rep.closed_control);
  double total = 0.0;
  for (double h : rep.histogram) total += h;
  CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("the shrinking torus control is not concentrated") {
  const auto traj = run(circle_config(256));
  const auto seq = extract_rescaled_sequence(traj.snapshots, 0.0, 0.25, std::vector<double>{3.0, 5.0});
  const auto rep = tangent_flow_report(seq, 2.5);
  CHECK(rep.closed_control);
  CHECK(rep.concentration > 1.0);
  double peak = 0.0;
  for (double h : rep.histogram) peak = std::max(peak, h);
  CHECK(peak < 0.1);
}

TEST_CASE("tangent flow report input errors") {
  const auto seq = static_sequence(line_graph(64, 10.0), {2.0});
  CHECK_THROWS_AS(tangent_flow_report(RescaledSequence{}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(tangent_flow_report(seq, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(tangent_flow_report(seq, 1.0, 10.0, 0), std::invalid_argument);
}

TEST_CASE("density ratio of a straight line is one") {
  const auto line = line_graph(2000, 10.0);
  for (double delta : {0.1, 0.5, 2.0})
    CHECK(density_ratio(line, 0.0, delta, false) == doctest::Approx(1.0).epsilon(1e-12));
  // A line missing the origin: the reflected copy stays outside small balls.
  CurveSnapshot shifted;
  shifted.mode = CurveMode::polyline;
  for (int j = 0; j <= 400; ++j) {
    shifted.params.push_back(j);
    shifted.points.push_back(cplx(-5.0 + 0.025 * j, 1.0));
  }
  const cplx x0(0.3, 1.0);
  for (double delta : {0.1, 0.5, 0.9})
    CHECK(density_ratio(shifted, x0, delta) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(density_ratio(line, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("density ratio at a regular point of the cone-angle 3pi/4 profile stays below 3/2") {
  const auto snap = initial_profile_graph(3 * pi / 4, {512, 0.8});
  const cplx x0 = std::polar(1.0, 3 * pi / 8);
  for (double delta : {0.05, 0.1, 0.2}) {
    const double r = density_ratio(snap, x0, delta);
    CHECK(r <= 1.5);
    CHECK(r >= 1.0 - 1e-3);
  }
}

TEST_CASE("density ratio at the origin approaches two near the blow-up") {
  const auto traj = run(cone_config(128));
  const auto& last = traj.snapshots.back();
  const double m = min_distance(last);
  double prev = 0.0;
  for (double f : {2.0, 4.0, 8.0, 16.0, 32.0}) {
    const double r = density_ratio(last, 0.0, f * m);
    CHECK(r > prev);
    CHECK(density_ratio(last, 0.0, f * m, false) == doctest::Approx(0.5 * r).epsilon(1e-12));
    prev = r;
  }
  CHECK(prev >= 2.0 - 0.05);
  CHECK(prev <= 2.0);
}
