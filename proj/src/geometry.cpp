#include "neckfield/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "neckfield/errors.hpp"

namespace neckfield::geom {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

void check_chart(const Geometry& g, double t) {
  if (!(std::abs(t) < g.chart_radius)) {
    std::ostringstream os;
    os << "abscissa " << t << " outside the graph chart |x1| < "
       << g.chart_radius;
    throw ValidationError(os.str());
  }
}

}  // namespace

void validate(const Geometry& g) {
  require(g.dimension == 2, "geometry dimension must be 2 for the planar field solver");
  require(g.radius > 0.0, "disk radius must be positive");
  require(g.eps > 0.0, "gap eps must be positive");
  require(g.chart_radius > 0.0, "chart_radius must be positive");
  require(g.chart_radius < g.radius,
          "chart_radius must be smaller than the disk radius");
  require(g.eps < 0.25 * g.chart_radius,
          "gap eps must satisfy eps < chart_radius / 4");
  require(g.outer_radius > 2.0 * g.radius + g.eps,
          "outer_radius must enclose both disks with clearance");
}

double graph_upper(const Geometry& g, double t) {
  check_chart(g, t);
  const double R = g.radius;
  // R - sqrt(R^2 - t^2), written to avoid cancellation for small t.
  return t * t / (R + std::sqrt(R * R - t * t));
}

double graph_lower(const Geometry& g, double t) { return -graph_upper(g, t); }

double boundary_upper(const Geometry& g, double t) {
  return 0.5 * g.eps + graph_upper(g, t);
}

double boundary_lower(const Geometry& g, double t) {
  return -0.5 * g.eps + graph_lower(g, t);
}

double gap_width(const Geometry& g, double t) {
  return g.eps + 2.0 * graph_upper(g, t);
}

void validate(const Geometry& g, const NeckWindow& w) {
  require(w.half_width > 0.0, "neck window half_width must be positive");
  require(std::abs(w.center) + w.half_width <= g.chart_radius,
          "neck window must sit inside the graph chart");
}

bool neck_membership(const Geometry& g, const NeckWindow& w, Vec2 p) {
  validate(g, w);
  if (std::abs(p.x - w.center) > w.half_width) return false;
  return p.y > boundary_lower(g, p.x) && p.y < boundary_upper(g, p.x);
}

void validate(const Geometry& g, const SizingParams& s) {
  require(s.theta > 0.0 && s.theta <= 1.0, "sizing theta must lie in (0, 1]");
  require(s.h_min > 0.0, "sizing h_min must be positive");
  require(s.h_min <= s.h_max, "sizing must satisfy h_min <= h_max");
  // Slope of the clamp target along the chart: theta * d(gap_width)/dt,
  // largest at the chart edge. Keeping it at or below 1 makes the in-neck
  // branch of the field 1-Lipschitz on its own.
  const double R = g.radius;
  const double R0 = g.chart_radius;
  const double max_gap_slope = 2.0 * R0 / std::sqrt(R * R - R0 * R0);
  if (s.theta * max_gap_slope > 1.0) {
    std::ostringstream os;
    os << "sizing theta " << s.theta
       << " too large: theta * max gap slope = " << s.theta * max_gap_slope
       << " exceeds 1 (shrink theta or the chart)";
    throw ValidationError(os.str());
  }
}

namespace {

// Clamp target along the neck.
double clamp_target(const Geometry& g, const SizingParams& s, double t) {
  return std::clamp(s.theta * gap_width(g, t), s.h_min, s.h_max);
}

// Distance from p to the closed vertical gap fiber at abscissa t.
double fiber_distance(const Geometry& g, double t, Vec2 p) {
  const double lo = boundary_lower(g, t);
  const double hi = boundary_upper(g, t);
  const double dy = p.y < lo ? lo - p.y : (p.y > hi ? p.y - hi : 0.0);
  return std::hypot(p.x - t, dy);
}

}  // namespace

// The sizing field is the inf-convolution of the clamp target over the neck
// slab: s(p) = min(h_max, inf_t [clamp_target(t) + dist(p, fiber(t))]).
// Inside the slab the infimum is attained on the fiber through p (the clamp
// target changes no faster than lateral distance, enforced by validate), so
// the field equals the clamp target there. Outside we take a grid scan plus
// golden-section polish; the exact inf-convolution is 1-Lipschitz and the
// polish keeps the approximation within roundoff of it.
double sizing(const Geometry& g, const SizingParams& s, Vec2 p) {
  validate(g);
  validate(g, s);

  const double R0 = g.chart_radius;
  const double t_edge = R0 * (1.0 - 1e-12);

  if (std::abs(p.x) <= t_edge && p.y >= boundary_lower(g, p.x) &&
      p.y <= boundary_upper(g, p.x)) {
    return clamp_target(g, s, p.x);
  }

  // Cheap reject: the infimum is at least the distance to the slab's
  // bounding box, so anything h_max away is flat.
  const double cap = 0.5 * g.eps + graph_upper(g, t_edge);
  const double dx = std::max(std::abs(p.x) - R0, 0.0);
  const double dy = std::max(std::abs(p.y) - cap, 0.0);
  if (dx * dx + dy * dy >= s.h_max * s.h_max) return s.h_max;

  const auto value_at = [&](double t) {
    return clamp_target(g, s, t) + fiber_distance(g, t, p);
  };

  // Fibers farther from p.x than the incumbent value cannot improve it.
  double best = s.h_max;
  double best_t = std::clamp(p.x, -t_edge, t_edge);
  best = std::min(best, value_at(best_t));

  const int kGrid = 2048;
  const double step = 2.0 * t_edge / kGrid;
  const double lo_t = std::max(-t_edge, p.x - best);
  const double hi_t = std::min(t_edge, p.x + best);
  for (int i = 0; i <= kGrid; ++i) {
    const double t = -t_edge + step * i;
    if (t < lo_t || t > hi_t) continue;
    const double v = value_at(t);
    if (v < best) {
      best = v;
      best_t = t;
    }
  }

  // Golden-section polish around the best fiber.
  double a = std::max(-t_edge, best_t - step);
  double b = std::min(t_edge, best_t + step);
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = value_at(x1);
  double f2 = value_at(x2);
  for (int it = 0; it < 60 && (b - a) > 1e-14 * (1.0 + std::abs(best_t)); ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = value_at(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = value_at(x2);
    }
  }
  best = std::min({best, f1, f2});
  return std::min(best, s.h_max);
}

}  // namespace neckfield::geom
