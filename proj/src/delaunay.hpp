#pragma once

#include <cstdint>
#include <vector>

// Incremental Delaunay triangulation with Lawson legalization. Geometry
// enters only through coordinates; constraint bookkeeping (which edges are
// domain boundary) lives with the caller, which keeps segments conforming by
// Gabriel splitting rather than by constrained flips.

namespace neckfield::meshing {

struct Tri {
  int v[3];    // CCW
  int adj[3];  // adj[i] across the edge opposite v[i]; -1 if none
};

class Triangulation {
 public:
  // Starts from two triangles covering the box [-half, half]^2. All real
  // points must lie strictly inside.
  explicit Triangulation(double half);

  // Inserts a point and restores the Delaunay property. Returns the vertex
  // id; if the point coincides with an existing vertex (to tolerance),
  // returns that vertex and inserts nothing. hint seeds the locate walk.
  int add_vertex(double x, double y, int hint = -1);

  int locate(double x, double y, int hint = -1) const;

  std::size_t vertex_count() const { return px_.size(); }
  double x(int v) const { return px_[v]; }
  double y(int v) const { return py_[v]; }

  // Triangle slots are never deleted: splits and flips reuse them in place,
  // so every index in [0, triangle_count) names a live triangle. The
  // generation counter bumps whenever a slot's contents change, which lets
  // refinement queues detect stale entries.
  std::size_t triangle_count() const { return tris_.size(); }
  const Tri& tri(int t) const { return tris_[t]; }
  std::uint32_t generation(int t) const { return gen_[t]; }

  // Some triangle incident to v.
  int incident_triangle(int v) const { return vert_tri_[v]; }

  // Finds the triangle that has directed edge (u, v); -1 if absent. The
  // apex is the third vertex of that triangle.
  int directed_edge_triangle(int u, int v) const;

  // Triangles created or re-filled by the latest add_vertex call.
  const std::vector<int>& last_star() const { return last_star_; }

 private:
  int new_slot();
  void replace_adj(int t, int old_n, int new_n);
  int local_index(int t, int v) const;
  void legalize(std::vector<std::pair<int, int>>& stack);
  void split_in_triangle(int t, int p);
  void split_on_edge(int t, int ei, int p);

  std::vector<double> px_, py_;
  std::vector<Tri> tris_;
  std::vector<std::uint32_t> gen_;
  std::vector<int> vert_tri_;
  std::vector<int> last_star_;
  double half_ = 0.0;
};

// Sign of the area of (a, b, c): > 0 for CCW. Thresholded against roundoff;
// returns 0 within the degeneracy band.
int orient2d(double ax, double ay, double bx, double by, double cx, double cy);

// > 0 when d lies strictly inside the circumcircle of CCW (a, b, c),
// 0 within the cocircularity band, < 0 outside.
int incircle(double ax, double ay, double bx, double by, double cx, double cy,
             double dx, double dy);

}  // namespace neckfield::meshing
