#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "neckfield/geometry.hpp"

// Conforming triangulation of the matrix region: inside the outer circle,
// outside the two inclusion disks. Curved boundaries are approximated by
// inscribed polygons whose vertices lie exactly on the circles; refinement
// vertices created on a boundary are projected back to the circle.

namespace neckfield::meshing {

enum class Marker { Outer, Inclusion1, Inclusion2 };

// Fixed names used by the dump format: OUTER, INCLUSION_1, INCLUSION_2.
// Inclusion 1 is the upper disk, inclusion 2 the lower one.
const char* marker_name(Marker m);
Marker marker_from_name(const std::string& name);  // throws ValidationError

// Directed so that the domain lies on the left of a -> b.
struct BoundaryEdge {
  int a = -1;
  int b = -1;
  Marker marker = Marker::Outer;
};

struct MeshParams {
  geom::SizingParams sizing;
  double angle_floor_deg = 20.0;        // quality target; must be <= 30
  std::size_t vertex_cap = 2'000'000;   // refinement budget
};

void validate(const MeshParams& p);

struct Mesh {
  std::vector<geom::Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;  // CCW vertex triples
  std::vector<BoundaryEdge> boundary;
  geom::Geometry geometry;  // generation echo
  MeshParams params;        // generation echo
};

// Builds the graded mesh: boundary sampling with spacing that follows the
// sizing field, Delaunay triangulation conforming to the boundary polygons,
// then Ruppert-style refinement until every interior triangle meets the
// angle floor and its circumradius is at most the sizing value at its
// centroid. Throws ValidationError on bad parameters and NumericalError when
// the vertex cap is exceeded.
Mesh generate_mesh(const geom::Geometry& g, const MeshParams& params);

struct QualityReport {
  std::size_t vertex_count = 0;
  std::size_t triangle_count = 0;
  std::size_t boundary_counts[3] = {0, 0, 0};  // by Marker order
  double min_angle_deg = 0.0;
  double max_angle_deg = 0.0;
  double min_edge = 0.0;
  double max_edge = 0.0;
  // max over marked vertices of | |v - center| - radius |
  double boundary_distance = 0.0;
  // edge length divided by sizing at the edge midpoint
  double edge_to_sizing_min = 0.0;
  double edge_to_sizing_max = 0.0;
  // histogram of that ratio with bin edges 0.25, 0.5, 0.75, 1, 1.25, 1.5, 2
  std::array<std::size_t, 8> edge_to_sizing_histogram{};
  // conformity, orientation, loop-closure, or centroid-membership findings;
  // empty for a valid mesh
  std::vector<std::string> violations;
};

QualityReport mesh_quality(const Mesh& mesh);

// One record per line: "v <x> <y>", "t <i> <j> <k>", "b <i> <j> <marker>",
// 0-based indices, 17 significant digits.
void dump_mesh(std::ostream& out, const Mesh& mesh);

// Parses the dump format back; geometry and params are attached as the echo
// (the dump itself does not carry them). Throws ValidationError on malformed
// input or out-of-range indices.
Mesh load_mesh(std::istream& in, const geom::Geometry& g,
               const MeshParams& params);

// Splits every triangle into four via edge midpoints. Midpoints of boundary
// edges are projected to their exact circle, so the polygonal boundary
// converges to the circles under repeated refinement.
Mesh uniform_refine(const Mesh& mesh);

}  // namespace neckfield::meshing
