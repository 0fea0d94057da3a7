#include <doctest.h>

#include <cmath>

#include "equiflow/flow.hpp"
#include "equiflow/monotonicity.hpp"

using namespace equiflow;

namespace {

const double kTorusDensity = 4.0 * pi / std::exp(1.0);

// Ray {u e^{i alpha}, 0 < u <= reach}, nodes clustered toward the origin.
CurveSnapshot ray(double alpha, std::size_t n, double reach) {
  CurveSnapshot s;
  s.mode = CurveMode::polyline;
  for (std::size_t j = 1; j <= n; ++j) {
    const double x = static_cast<double>(j) / static_cast<double>(n);
    const double u = reach * x * x;
    s.params.push_back(u);
    s.points.push_back(std::polar(u, alpha));
  }
  return s;
}

// Full line through the origin as a graph u = 0.
CurveSnapshot line_graph(std::size_t n, double half_width) {
  auto s = initial_profile_graph(pi / 2, {n, 0.0}, half_width);
  for (auto& z : s.points) z = {z.real(), 0.0};
  return s;
}

FlowConfig circle_config(double r0, std::size_t nodes, double t_end) {
  FlowConfig c;
  c.family.kind = InitialFamily::Kind::circle;
  c.family.circle_radius = r0;
  c.nodes = nodes;
  c.t_end = t_end;
  return c;
}

CurveSnapshot shrunk_circle(double t, std::size_t n = 256) {
  auto c = circle_profile(std::sqrt(1.0 - 4.0 * t), n);
  c.t = t;
  return c;
}

}  // namespace

TEST_CASE("a ray through the origin has unit density") {
  const auto r = ray(0.7, 4000, 40.0);
  for (double s : {0.1, 1.0, 10.0}) {
    const auto d = gaussian_density(r, {{}, s});
    CHECK(d.value == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(d.error < 1e-6);
  }
}

TEST_CASE("a full line through the origin counts both half-planes") {
  const auto l = line_graph(4000, 40.0);
  const auto d = gaussian_density(l, {{}, 1.0});
  CHECK(d.value == doctest::Approx(2.0).epsilon(1e-4));
}

TEST_CASE("shrinking torus has density 4 pi / e at every time") {
  CHECK(kTorusDensity == doctest::Approx(4.6229).epsilon(1e-4));
  for (double t : {0.0, 0.05, 0.1, 0.2, 0.24}) {
    const auto d = gaussian_density(shrunk_circle(t), {{}, 0.25});
    CHECK(d.value == doctest::Approx(kTorusDensity).epsilon(1e-10));
    CHECK(d.tail == 0.0);
  }
}

TEST_CASE("off-origin density matches a direct surface quadrature") {
  const KernelSpec k{{cplx{0.2, -0.1}, cplx{0.0, 0.3}}, 0.3};
  const auto c = shrunk_circle(0.0, 256);
  const auto d = gaussian_density(c, k);
  // Midpoint rule over (polar angle, rotation angle) on the unit circle.
  const int n = 400;
  const double h = 2.0 * pi / n;
  double direct = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const cplx g = std::polar(1.0, (i + 0.5) * h);
      const double a = (j + 0.5) * h;
      const double dist2 = std::norm(g * std::cos(a) - k.center[0]) + std::norm(g * std::sin(a) - k.center[1]);
      direct += std::exp(-dist2 / (4.0 * k.T)) / (4.0 * pi * k.T) * h * h;
    }
  CHECK(d.value == doctest::Approx(direct).epsilon(1e-8));
  CHECK(d.refinement.size() >= 2);
}

TEST_CASE("density and weighted moment are non-increasing along a run") {
  FlowConfig c;
  c.nodes = 256;
  c.t_end = 0.5;
  const auto traj = run(c);
  const KernelSpec k{{}, 1.0};
  double prev_d = 0.0, prev_m = 0.0;
  for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
    const auto d = gaussian_density(traj.snapshots[i], k);
    const auto m = weighted_theta_moment(traj.snapshots[i], 1, pi, k);
    if (i > 0) {
      CHECK(d.value <= prev_d + 1e-8 + d.error + d.tail);
      CHECK(m.value <= prev_m + 1e-8 + m.error + m.tail);
    }
    prev_d = d.value;
    prev_m = m.value;
  }
}

TEST_CASE("weighted moment vanishes when the angle equals the offset") {
  const auto r = ray(0.4, 400, 20.0);
  CHECK(weighted_theta_moment(r, 1, 0.8, {{}, 1.0}).value < 1e-20);
  const auto sl = initial_profile_graph(pi / 2, {512, 0.0});
  CHECK(weighted_theta_moment(sl, 2, pi, {{}, 1.0}).value < 1e-12);
  CHECK_THROWS_AS(weighted_theta_moment(r, 0, 0.8, {{}, 1.0}), std::invalid_argument);
}

TEST_CASE("stationary profile moments are invariant under joint time translation") {
  FlowConfig c;
  c.beta = pi / 2;
  c.nodes = 256;
  c.t_end = 0.1;
  const auto traj = run(c);
  const auto& a = traj.snapshots.front();
  const auto& b = traj.snapshots.back();
  for (int q : {1, 2})
    for (double y : {0.0, 2.0}) {
      const double ma = weighted_theta_moment(a, q, y, {{}, a.t + 1.0}).value;
      const double mb = weighted_theta_moment(b, q, y, {{}, b.t + 1.0}).value;
      CHECK(mb == doctest::Approx(ma).epsilon(1e-4));
    }
}

TEST_CASE("Huisken defect vanishes on planes and matching shrinkers only") {
  CHECK(huisken_defect(ray(1.1, 400, 20.0), {{}, 1.0}).value < 1e-20);
  const auto c = shrunk_circle(0.1, 512);
  const auto match = huisken_defect(c, {{}, 0.25});
  CHECK(match.value < 1e-3);
  const auto wrong = huisken_defect(c, {{}, 0.35});
  CHECK(wrong.value > 0.1);
  CHECK(match.value >= 0.0);
}

TEST_CASE("kernel time must lie after the snapshot") {
  const auto c = shrunk_circle(0.1);
  CHECK_THROWS_AS(gaussian_density(c, {{}, 0.1}), std::invalid_argument);
  CHECK_THROWS_AS(huisken_defect(c, {{}, 0.05}), std::invalid_argument);
}

TEST_CASE("rescale with unit scale only shifts time") {
  auto snap = initial_profile_graph(3 * pi / 4, {64, 0.0});
  snap.t = 0.3;
  const auto r = rescale(snap, 1.0, 0.0, 1.0);
  CHECK(r.mode == snap.mode);
  CHECK(r.t == doctest::Approx(-0.7));
  const auto a = world_points(snap), b = world_points(r);
  for (std::size_t j = 0; j < a.size(); ++j) CHECK(std::abs(a[j] - b[j]) < 1e-14);
  CHECK_THROWS_AS(rescale(snap, 0.0, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(rescale(snap, 2.0, 0.0, 0.3), std::invalid_argument);
  const auto off = rescale(snap, 2.0, cplx(0.1, 0.2), 1.0);
  CHECK(off.mode == CurveMode::polyline);
  CHECK(std::abs(world_points(off)[5] - 2.0 * (a[5] - cplx(0.1, 0.2))) < 1e-14);
}

TEST_CASE("rescaled shrinking circle has radius sqrt(-4 tau) for every scale") {
  for (double sigma : {0.5, 2.0, 10.0}) {
    const auto r = rescale(shrunk_circle(0.2), sigma, 0.0, 0.25);
    CHECK(r.t == doctest::Approx(-0.05 * sigma * sigma));
    for (const auto& z : r.points) CHECK(std::abs(z) == doctest::Approx(std::sqrt(-4.0 * r.t)).epsilon(1e-12));
  }
}

TEST_CASE("Gaussian density is scale invariant") {
  FlowConfig c;
  c.nodes = 256;
  c.t_end = 0.2;
  const auto traj = run(c);
  const auto& snap = traj.snapshots.back();
  const double T = 1.0;
  const double base = gaussian_density(snap, {{}, T}).value;
  for (double sigma : {0.5, 2.0, 7.0}) {
    const auto r = rescale(snap, sigma, 0.0, T);
    CHECK(gaussian_density(r, {{}, 0.0}).value == doctest::Approx(base).epsilon(1e-10));
  }
}

TEST_CASE("rescaled sequence of the circle is the circle of radius 2") {
  const auto traj = run(circle_config(1.0, 256, 0.3));
  const std::vector<double> scales{3.0, 5.0, 8.0};
  const auto seq = extract_rescaled_sequence(traj.snapshots, 0.0, 0.25, scales);
  REQUIRE(seq.members.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& m = seq.members[k];
    CHECK(m.sigma == scales[k]);
    CHECK(m.tau == doctest::Approx(-1.0));
    CHECK(m.snapshot.t == doctest::Approx(-1.0));
    for (const auto& z : m.snapshot.points) CHECK(std::abs(z) == doctest::Approx(2.0).epsilon(1e-2));
  }
  CHECK_THROWS_AS(extract_rescaled_sequence(traj.snapshots, 0.0, 0.25, std::vector<double>{1.0}),
                  std::out_of_range);
}

TEST_CASE("unit scale reproduces the trajectory shifted in time") {
  const auto traj = run(circle_config(1.0, 128, 0.2));
  const double T = 1.1;
  const auto seq = extract_rescaled_sequence(traj.snapshots, 0.0, T, std::vector<double>{1.0});
  const auto& m = seq.members.front();
  const double exact = std::sqrt(1.0 - 4.0 * 0.1);
  for (const auto& z : m.snapshot.points)
    CHECK(std::abs(std::abs(z) - exact) <= m.error_bound + 1e-5);
  CHECK(m.snapshot.t == doctest::Approx(-1.0));
}

TEST_CASE("sequence scales must increase") {
  const auto traj = run(circle_config(1.0, 128, 0.3));
  CHECK_THROWS_AS(extract_rescaled_sequence(traj.snapshots, 0.0, 0.25, std::vector<double>{8.0, 3.0}),
                  std::invalid_argument);
}

TEST_CASE("dissipation vanishes on planes and is positive on a circle") {
  CHECK(dissipation_in_ball(ray(0.5, 200, 5.0), 2.0) < 1e-20);
  const auto c = circle_profile(1.0, 256);
  // |H| = 2, |x_perp| = 1 on the unit circle, surface area 4 pi^2.
  CHECK(dissipation_in_ball(c, 2.0) == doctest::Approx(5.0 * 4.0 * pi * pi).epsilon(1e-3));
  CHECK(dissipation_in_ball(c, 0.5) == 0.0);
}
