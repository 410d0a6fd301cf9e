#include "delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "neckfield/errors.hpp"

namespace neckfield::meshing {

// Both predicates evaluate the determinant in extended precision and compare
// it against a forward rounding-error bound built from the same terms with
// absolute values.  A magnitude below the bound means the sign cannot be
// trusted at this precision, so the configuration is reported as degenerate.
// Inputs whose determinant genuinely vanishes (for instance four samples of
// one circle) land in the zero branch instead of getting an arbitrary sign.

namespace {
constexpr long double kEps = std::numeric_limits<long double>::epsilon();
}

int orient2d(double ax, double ay, double bx, double by, double cx,
             double cy) {
  const long double l = (static_cast<long double>(bx) - ax) *
                        (static_cast<long double>(cy) - ay);
  const long double r = (static_cast<long double>(by) - ay) *
                        (static_cast<long double>(cx) - ax);
  const long double det = l - r;
  const long double bound = 8.0L * kEps * (std::abs(l) + std::abs(r));
  if (det > bound) return 1;
  if (det < -bound) return -1;
  return 0;
}

int incircle(double ax, double ay, double bx, double by, double cx, double cy,
             double dx, double dy) {
  const long double adx = static_cast<long double>(ax) - dx;
  const long double ady = static_cast<long double>(ay) - dy;
  const long double bdx = static_cast<long double>(bx) - dx;
  const long double bdy = static_cast<long double>(by) - dy;
  const long double cdx = static_cast<long double>(cx) - dx;
  const long double cdy = static_cast<long double>(cy) - dy;
  const long double ad = adx * adx + ady * ady;
  const long double bd = bdx * bdx + bdy * bdy;
  const long double cd = cdx * cdx + cdy * cdy;
  const long double det = adx * (bdy * cd - bd * cdy) -
                          ady * (bdx * cd - bd * cdx) +
                          ad * (bdx * cdy - bdy * cdx);
  const long double perm = std::abs(adx) * (std::abs(bdy) * cd + bd * std::abs(cdy)) +
                           std::abs(ady) * (std::abs(bdx) * cd + bd * std::abs(cdx)) +
                           ad * (std::abs(bdx) * std::abs(cdy) +
                                 std::abs(bdy) * std::abs(cdx));
  const long double bound = 32.0L * kEps * perm;
  if (det > bound) return 1;
  if (det < -bound) return -1;
  return 0;
}

Triangulation::Triangulation(double half) : half_(half) {
  px_ = {-half, half, half, -half};
  py_ = {-half, -half, half, half};
  vert_tri_ = {0, 0, 0, 1};
  // Square split along the (0, 2) diagonal.
  tris_.push_back({{0, 1, 2}, {-1, 1, -1}});
  tris_.push_back({{0, 2, 3}, {-1, -1, 0}});
  gen_ = {0, 0};
}

int Triangulation::new_slot() {
  tris_.push_back({{-1, -1, -1}, {-1, -1, -1}});
  gen_.push_back(0);
  return static_cast<int>(tris_.size()) - 1;
}

int Triangulation::local_index(int t, int v) const {
  for (int i = 0; i < 3; ++i)
    if (tris_[t].v[i] == v) return i;
  throw NumericalError("triangulation adjacency corrupted (vertex not in triangle)");
}

void Triangulation::replace_adj(int t, int old_n, int new_n) {
  if (t < 0) return;
  for (int i = 0; i < 3; ++i) {
    if (tris_[t].adj[i] == old_n) {
      tris_[t].adj[i] = new_n;
      return;
    }
  }
  throw NumericalError("triangulation adjacency corrupted (neighbor missing)");
}

int Triangulation::locate(double x, double y, int hint) const {
  int t = hint;
  if (t < 0 || t >= static_cast<int>(tris_.size()))
    t = static_cast<int>(tris_.size()) - 1;
  const std::size_t cap = 4 * tris_.size() + 64;
  int prev = -1;
  for (std::size_t step = 0; step < cap; ++step) {
    const Tri& tr = tris_[t];
    int next = -1;
    for (int i = 0; i < 3; ++i) {
      const int a = tr.v[(i + 1) % 3];
      const int b = tr.v[(i + 2) % 3];
      if (orient2d(px_[a], py_[a], px_[b], py_[b], x, y) < 0) {
        const int n = tr.adj[i];
        if (n >= 0 && n != prev) {
          next = n;
          break;
        }
        if (n >= 0) next = n;  // allowed fallback, avoids sticking
      }
    }
    if (next < 0) return t;
    prev = t;
    t = next;
  }
  // Walk cycled in a degenerate patch: deterministic exhaustive fallback.
  for (int i = 0; i < static_cast<int>(tris_.size()); ++i) {
    const Tri& tr = tris_[i];
    bool inside = true;
    for (int e = 0; e < 3 && inside; ++e) {
      const int a = tr.v[(e + 1) % 3];
      const int b = tr.v[(e + 2) % 3];
      if (orient2d(px_[a], py_[a], px_[b], py_[b], x, y) < 0) inside = false;
    }
    if (inside) return i;
  }
  throw NumericalError("point location failed (outside triangulation?)");
}

void Triangulation::legalize(std::vector<std::pair<int, int>>& stack) {
  while (!stack.empty()) {
    const auto [t, ei] = stack.back();
    stack.pop_back();
    const int o = tris_[t].adj[ei];
    if (o < 0) continue;
    const Tri tt = tris_[t];
    const int p = tt.v[ei];
    const int a = tt.v[(ei + 1) % 3];
    const int b = tt.v[(ei + 2) % 3];
    int oi = -1;
    for (int i = 0; i < 3; ++i)
      if (tris_[o].adj[i] == t) oi = i;
    if (oi < 0)
      throw NumericalError("triangulation adjacency corrupted (asymmetric link)");
    const int d = tris_[o].v[oi];
    if (incircle(px_[p], py_[p], px_[a], py_[a], px_[b], py_[b], px_[d],
                 py_[d]) <= 0)
      continue;

    // Flip edge (a, b) -> (p, d), reusing slots t and o. The shared edge
    // appears in o as (b, a): o.v[(oi+1)%3] = b, o.v[(oi+2)%3] = a.
    const Tri ot = tris_[o];
    if (ot.v[(oi + 1) % 3] != b || ot.v[(oi + 2) % 3] != a)
      throw NumericalError("triangulation adjacency corrupted (edge mismatch)");
    const int n_pa = tt.adj[(ei + 2) % 3];
    const int n_bp = tt.adj[(ei + 1) % 3];
    const int n_ad = ot.adj[(oi + 1) % 3];
    const int n_db = ot.adj[(oi + 2) % 3];

    tris_[t] = {{p, a, d}, {n_ad, o, n_pa}};
    tris_[o] = {{p, d, b}, {n_db, n_bp, t}};
    ++gen_[t];
    ++gen_[o];
    replace_adj(n_ad, o, t);
    replace_adj(n_bp, t, o);
    vert_tri_[p] = t;
    vert_tri_[a] = t;
    vert_tri_[d] = t;
    vert_tri_[b] = o;
    last_star_.push_back(t);
    last_star_.push_back(o);
    stack.emplace_back(t, 0);  // edge (a, d)
    stack.emplace_back(o, 0);  // edge (d, b)
  }
}

void Triangulation::split_in_triangle(int t, int p) {
  const Tri old = tris_[t];
  const int a = old.v[0], b = old.v[1], c = old.v[2];
  const int t1 = new_slot();
  const int t2 = new_slot();
  // t  -> (a, b, p), t1 -> (b, c, p), t2 -> (c, a, p)
  tris_[t] = {{a, b, p}, {t1, t2, old.adj[2]}};
  tris_[t1] = {{b, c, p}, {t2, t, old.adj[0]}};
  tris_[t2] = {{c, a, p}, {t, t1, old.adj[1]}};
  ++gen_[t];
  replace_adj(old.adj[0], t, t1);
  replace_adj(old.adj[1], t, t2);
  vert_tri_[p] = t;
  vert_tri_[a] = t;
  vert_tri_[b] = t;
  vert_tri_[c] = t1;
  last_star_.assign({t, t1, t2});
  std::vector<std::pair<int, int>> stack{{t, 2}, {t1, 2}, {t2, 2}};
  legalize(stack);
}

void Triangulation::split_on_edge(int t, int ei, int p) {
  const int o = tris_[t].adj[ei];
  if (o < 0) {
    // Point on the outer hull; cannot happen for interior domains.
    split_in_triangle(t, p);
    return;
  }
  const Tri tt = tris_[t];
  const int c = tt.v[ei];
  const int a = tt.v[(ei + 1) % 3];
  const int b = tt.v[(ei + 2) % 3];
  int oi = -1;
  for (int i = 0; i < 3; ++i)
    if (tris_[o].adj[i] == t) oi = i;
  if (oi < 0)
    throw NumericalError("triangulation adjacency corrupted (asymmetric link)");
  const Tri ot = tris_[o];
  const int d = ot.v[oi];
  if (ot.v[(oi + 1) % 3] != b || ot.v[(oi + 2) % 3] != a)
    throw NumericalError("triangulation adjacency corrupted (edge mismatch)");

  // p lies on edge (a, b); t = (a, b, c) and o = (d, b, a) up to rotation.
  // Replace the pair by four triangles:
  //   t -> (a, p, c), A -> (p, b, c), o -> (p, a, d), B -> (b, p, d)
  const int n_bc = tt.adj[(ei + 1) % 3];
  const int n_ca = tt.adj[(ei + 2) % 3];
  const int n_ad = ot.adj[(oi + 1) % 3];
  const int n_db = ot.adj[(oi + 2) % 3];
  const int A = new_slot();
  const int B = new_slot();

  tris_[t] = {{a, p, c}, {A, n_ca, o}};
  tris_[A] = {{p, b, c}, {n_bc, t, B}};
  tris_[o] = {{p, a, d}, {n_ad, B, t}};
  tris_[B] = {{b, p, d}, {o, n_db, A}};
  ++gen_[t];
  ++gen_[o];
  replace_adj(n_bc, t, A);
  replace_adj(n_db, o, B);

  vert_tri_[p] = t;
  vert_tri_[a] = t;
  vert_tri_[b] = A;
  vert_tri_[c] = t;
  vert_tri_[d] = o;
  last_star_.assign({t, A, o, B});
  std::vector<std::pair<int, int>> stack{
      {t, 1},  // across (c, a)
      {A, 0},  // across (b, c)
      {o, 0},  // across (a, d)
      {B, 1},  // across (d, b)
  };
  legalize(stack);
}

int Triangulation::add_vertex(double x, double y, int hint) {
  const int t = locate(x, y, hint);
  const Tri& tr = tris_[t];
  // Coincident-vertex guard.
  for (int i = 0; i < 3; ++i) {
    const int v = tr.v[i];
    const double dx = px_[v] - x;
    const double dy = py_[v] - y;
    const double tol = 1e-13 * (1.0 + std::abs(x) + std::abs(y));
    if (dx * dx + dy * dy <= tol * tol) return v;
  }
  const int p = static_cast<int>(px_.size());
  px_.push_back(x);
  py_.push_back(y);
  vert_tri_.push_back(-1);

  // On-edge test.
  int edge = -1;
  for (int i = 0; i < 3; ++i) {
    const int a = tr.v[(i + 1) % 3];
    const int b = tr.v[(i + 2) % 3];
    if (orient2d(px_[a], py_[a], px_[b], py_[b], x, y) == 0) {
      edge = i;
      break;
    }
  }
  if (edge >= 0)
    split_on_edge(t, edge, p);
  else
    split_in_triangle(t, p);
  return p;
}

int Triangulation::directed_edge_triangle(int u, int v) const {
  const int start = vert_tri_[u];
  if (start < 0) return -1;
  // Walk the star of u.
  int t = start;
  for (std::size_t guard = 0; guard < tris_.size() + 4; ++guard) {
    const int i = local_index(t, u);
    if (tris_[t].v[(i + 1) % 3] == v) return t;
    // rotate around u: move across the edge (u, next) ... take neighbor
    // opposite to v[(i+2)%3], which shares edge (u, v[(i+1)%3]).
    const int n = tris_[t].adj[(i + 2) % 3];
    if (n < 0) break;
    if (n == start) return -1;
    t = n;
  }
  // Hull interruption: walk the other way.
  t = start;
  for (std::size_t guard = 0; guard < tris_.size() + 4; ++guard) {
    const int i = local_index(t, u);
    if (tris_[t].v[(i + 1) % 3] == v) return t;
    const int n = tris_[t].adj[(i + 1) % 3];
    if (n < 0 || n == start) return -1;
    t = n;
  }
  return -1;
}

}  // namespace neckfield::meshing
