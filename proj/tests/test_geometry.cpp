#include "neckfield/geometry.hpp"

#include "doctest.h"

#include <cmath>
#include <random>

#include "neckfield/errors.hpp"

using namespace neckfield;

namespace {

geom::Geometry default_geom(double eps = 1e-3) {
  geom::Geometry g;
  g.eps = eps;
  return g;
}

}  // namespace

TEST_CASE("geometry validation accepts the default and names violations") {
  CHECK_NOTHROW(geom::validate(default_geom()));

  geom::Geometry g = default_geom();
  g.eps = g.chart_radius / 2.0;  // violates eps < R0/4
  CHECK_THROWS_AS(geom::validate(g), ValidationError);

  g = default_geom();
  g.radius = -1.0;
  CHECK_THROWS_AS(geom::validate(g), ValidationError);

  g = default_geom();
  g.chart_radius = 1.5;  // chart must stay inside the disk radius
  CHECK_THROWS_AS(geom::validate(g), ValidationError);

  g = default_geom();
  g.outer_radius = 1.0;  // container would intersect the disks
  CHECK_THROWS_AS(geom::validate(g), ValidationError);

  g = default_geom();
  g.dimension = 3;  // field geometry is planar only
  CHECK_THROWS_AS(geom::validate(g), ValidationError);
}

TEST_CASE("graph functions: tangency, symmetry, closed form") {
  const geom::Geometry g = default_geom();
  CHECK(geom::graph_upper(g, 0.0) == 0.0);
  CHECK(geom::graph_lower(g, 0.0) == 0.0);
  // Disk cap with R = 1 evaluated by hand at t = 0.5 is outside the default
  // chart half-width 0.5, so widen the chart for the closed-form check.
  geom::Geometry wide = g;
  wide.chart_radius = 0.8;
  CHECK(geom::graph_upper(wide, 0.5) ==
        doctest::Approx(1.0 - std::sqrt(0.75)).epsilon(1e-14));
  CHECK(geom::graph_lower(wide, 0.5) ==
        doctest::Approx(-(1.0 - std::sqrt(0.75))).epsilon(1e-14));
  CHECK(geom::graph_upper(g, 0.25) == geom::graph_upper(g, -0.25));
  CHECK_THROWS_AS(geom::graph_upper(g, 0.5), ValidationError);
  CHECK_THROWS_AS(geom::graph_upper(g, -0.6), ValidationError);

  // mu = 1/R: (f - g)/t^2 tends to mu at the axis.
  for (double t : {1e-2, 1e-3, 1e-4})
    CHECK((geom::graph_upper(g, t) - geom::graph_lower(g, t)) / (t * t) ==
          doctest::Approx(g.mu()).epsilon(1e-4));
}

TEST_CASE("gap width: frozen value, parabolic envelope, monotonicity") {
  const geom::Geometry g = default_geom(1e-3);
  CHECK(geom::gap_width(g, 0.0) == doctest::Approx(1e-3).epsilon(1e-15));
  // 1e-3 + 2 (1 - sqrt(0.99)) evaluated by hand.
  CHECK(geom::gap_width(g, 0.1) ==
        doctest::Approx(0.01102512578676007).epsilon(1e-12));

  double prev = geom::gap_width(g, 0.0);
  for (int i = 1; i <= 200; ++i) {
    const double t = 0.4999 * i / 200.0;
    const double w = geom::gap_width(g, t);
    CHECK(w > prev);           // strictly increasing in |t|
    CHECK(w == geom::gap_width(g, -t));  // even
    // Disk-chart envelope eps + mu t^2 (1 -+ mu^2 t^2).
    const double q = g.mu() * t * t;
    CHECK(w >= g.eps + q * (1.0 - g.mu() * g.mu() * t * t) - 1e-15);
    CHECK(w <= g.eps + q * (1.0 + g.mu() * g.mu() * t * t) + 1e-15);
    prev = w;
  }

  // Ratio window from a brute-force scan: gap/(eps + t^2) within [0.9, 1.1]
  // for |t| <= 0.2 at R = 1.
  for (int i = 0; i <= 400; ++i) {
    const double t = -0.2 + 0.4 * i / 400.0;
    const double ratio = geom::gap_width(g, t) / (g.eps + t * t);
    CHECK(ratio >= 0.9);
    CHECK(ratio <= 1.1);
  }
}

TEST_CASE("neck membership: strict interior of the gap slab") {
  const geom::Geometry g = default_geom(1e-3);
  const geom::NeckWindow w{0.0, std::sqrt(g.eps)};
  CHECK_NOTHROW(geom::validate(g, w));
  CHECK(geom::neck_membership(g, w, {0.0, 0.0}));
  CHECK(geom::neck_membership(g, w, {0.0, g.eps / 4.0}));
  // On the upper graph: excluded by strictness.
  const double t = 0.01;
  CHECK_FALSE(geom::neck_membership(g, w, {t, geom::boundary_upper(g, t)}));
  // Outside the horizontal window.
  CHECK_FALSE(geom::neck_membership(g, w, {2.0 * w.half_width, 0.0}));

  geom::NeckWindow bad{0.4, 0.2};  // pokes outside the chart
  CHECK_THROWS_AS(geom::validate(g, bad), ValidationError);
}

TEST_CASE("sizing field: clamp values, saturation, global 1-Lipschitz") {
  const geom::Geometry g = default_geom(1e-3);
  geom::SizingParams s;
  s.theta = 0.25;
  s.h_min = 1e-4;
  s.h_max = 0.2;
  CHECK_NOTHROW(geom::validate(g, s));

  // At the axis: max(theta*eps, h_min) = 2.5e-4.
  CHECK(geom::sizing(g, s, {0.0, 0.0}) == doctest::Approx(2.5e-4).epsilon(1e-12));
  // Far field saturates at h_max.
  CHECK(geom::sizing(g, s, {0.0, 3.0}) == doctest::Approx(s.h_max));
  CHECK(geom::sizing(g, s, {-4.0, 0.0}) == doctest::Approx(s.h_max));

  // h_min clamp engages when theta*eps falls below it.
  geom::SizingParams tight = s;
  tight.h_min = 1e-3;
  CHECK(geom::sizing(g, tight, {0.0, 0.0}) == doctest::Approx(1e-3));

  // 1-Lipschitz along random segments, sampled finely.
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> coord(-4.5, 4.5);
  for (int trial = 0; trial < 50; ++trial) {
    const geom::Vec2 a{coord(rng), coord(rng)};
    const geom::Vec2 b{coord(rng), coord(rng)};
    double prev = geom::sizing(g, s, a);
    const int steps = 300;
    const double seg = std::hypot(b.x - a.x, b.y - a.y) / steps;
    for (int i = 1; i <= steps; ++i) {
      const double u = static_cast<double>(i) / steps;
      const geom::Vec2 p{a.x + u * (b.x - a.x), a.y + u * (b.y - a.y)};
      const double cur = geom::sizing(g, s, p);
      CHECK(std::abs(cur - prev) <= seg * (1.0 + 1e-9));
      prev = cur;
    }
  }

  geom::SizingParams bad = s;
  bad.h_min = 0.5;  // h_min above h_max
  CHECK_THROWS_AS(geom::validate(g, bad), ValidationError);
}
