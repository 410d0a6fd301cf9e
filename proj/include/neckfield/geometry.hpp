#pragma once

#include <cstddef>

// Planar geometry of two equal disks separated by a thin gap, stacked along
// the x2 axis inside a large circular container. Near the gap the disk
// boundaries are graphs over |x1| < chart_radius:
//   upper disk:  x2 =  eps/2 + f(x1),   f(x1) = R - sqrt(R^2 - x1^2) >= 0
//   lower disk:  x2 = -eps/2 + g(x1),   g = -f
// so the surface separation is gap_width = eps + f - g = mu*x1^2 + eps + ...
// with mu = 1/R.

namespace neckfield::geom {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct Geometry {
  int dimension = 2;        // the field solver requires 2
  double radius = 1.0;      // inclusion disk radius R
  double eps = 1e-3;        // surface-to-surface distance at the neck
  double outer_radius = 5.0;
  double chart_radius = 0.5;  // R0, graph chart half-width

  double mu() const { return 1.0 / radius; }
  Vec2 center_upper() const { return {0.0, radius + 0.5 * eps}; }
  Vec2 center_lower() const { return {0.0, -(radius + 0.5 * eps)}; }
};

// Throws ValidationError on violated constraints (positivity, eps < R0/4,
// chart strictly inside the disk radius, container clear of the disks).
void validate(const Geometry& g);

// Deviation of the cap from its tangent plane; f(0) = g(0) = 0.
// Throws ValidationError when |t| >= chart_radius.
double graph_upper(const Geometry& g, double t);
double graph_lower(const Geometry& g, double t);

// Physical boundary heights over the chart.
double boundary_upper(const Geometry& g, double t);  //  eps/2 + f(t)
double boundary_lower(const Geometry& g, double t);  // -eps/2 + g(t)

double gap_width(const Geometry& g, double t);  // eps + f(t) - g(t)

// Vertical slab around the neck: |x1 - center| <= half_width, strictly
// between the two disk boundaries.
struct NeckWindow {
  double center = 0.0;
  double half_width = 0.0;
};

// Throws ValidationError unless the window sits inside the chart:
// half_width > 0 and |center| + half_width <= chart_radius.
void validate(const Geometry& g, const NeckWindow& w);

bool neck_membership(const Geometry& g, const NeckWindow& w, Vec2 p);

// Mesh sizing field. Over the neck slab the target edge length is
// clamp(theta * gap_width(x1), h_min, h_max); away from it the field grows
// with slope at most 1 up to h_max, which makes it globally 1-Lipschitz.
// h_max bounds the inclusion-polygon chord length away from the neck, and
// through it the secant geometry error O(h_max^2 / R) seen by the field
// solver; 0.1 keeps that error near 1e-3 on the default disks.
struct SizingParams {
  double theta = 0.25;
  double h_min = 1e-5;
  double h_max = 0.1;
};

void validate(const Geometry& g, const SizingParams& s);

double sizing(const Geometry& g, const SizingParams& s, Vec2 p);

}  // namespace neckfield::geom
