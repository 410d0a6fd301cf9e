#include "neckfield/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "delaunay.hpp"
#include "neckfield/errors.hpp"

namespace neckfield::meshing {

const char* marker_name(Marker m) {
  switch (m) {
    case Marker::Outer:
      return "OUTER";
    case Marker::Inclusion1:
      return "INCLUSION_1";
    case Marker::Inclusion2:
      return "INCLUSION_2";
  }
  throw ValidationError("unknown boundary marker value");
}

Marker marker_from_name(const std::string& name) {
  if (name == "OUTER") return Marker::Outer;
  if (name == "INCLUSION_1") return Marker::Inclusion1;
  if (name == "INCLUSION_2") return Marker::Inclusion2;
  throw ValidationError("unknown boundary marker name: " + name);
}

void validate(const MeshParams& p) {
  if (!(p.angle_floor_deg > 0.0) || p.angle_floor_deg > 30.0)
    throw ValidationError(
        "mesh angle floor must lie in (0, 30] degrees; refinement is not "
        "guaranteed to terminate above 30");
  if (p.vertex_cap < 64)
    throw ValidationError("mesh vertex cap must be at least 64");
}

namespace {

constexpr double kPi = 3.14159265358979323846;

double norm_param(double t) {
  while (t >= kPi) t -= 2.0 * kPi;
  while (t < -kPi) t += 2.0 * kPi;
  return t;
}

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

// Boundary circles are parameterized as P(t) = center + r (sin t, sy cos t),
// t in [-pi, pi), so that t = 0 sits on the symmetry axis x1 = 0 (at the gap
// pole for the inclusions) and mirrored parameters +-t give exactly mirrored
// coordinates. dir = +1 when the domain lies on the left while t increases.
struct Circle {
  geom::Vec2 center;
  double r = 0.0;
  double sy = 1.0;
  int dir = 1;
  Marker marker = Marker::Outer;
  double max_chord = 0.0;
};

geom::Vec2 circle_point(const Circle& c, double t) {
  return {c.center.x + c.r * std::sin(t),
          c.center.y + c.sy * c.r * std::cos(t)};
}

double circle_param(const Circle& c, geom::Vec2 p) {
  return std::atan2(p.x - c.center.x, c.sy * (p.y - c.center.y));
}

double dist2(geom::Vec2 a, geom::Vec2 b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

struct TriShape {
  geom::Vec2 centroid;
  double area = 0.0;
  double circumradius = 0.0;
  double min_angle = 0.0;  // radians
};

TriShape tri_shape(geom::Vec2 a, geom::Vec2 b, geom::Vec2 c) {
  TriShape s;
  s.centroid = {(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
  s.area = 0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x));
  const double la = std::sqrt(dist2(b, c));
  const double lb = std::sqrt(dist2(c, a));
  const double lc = std::sqrt(dist2(a, b));
  if (s.area <= 0.0) {
    s.circumradius = std::numeric_limits<double>::infinity();
    s.min_angle = 0.0;
    return s;
  }
  s.circumradius = la * lb * lc / (4.0 * s.area);
  // law of sines: angle opposite the shortest edge is the smallest
  const double lmin = std::min({la, lb, lc});
  double q = lmin / (2.0 * s.circumradius);
  q = std::min(1.0, std::max(-1.0, q));
  s.min_angle = std::asin(q);
  return s;
}

geom::Vec2 circumcenter(geom::Vec2 a, geom::Vec2 b, geom::Vec2 c) {
  const double bx = b.x - a.x, by = b.y - a.y;
  const double cx = c.x - a.x, cy = c.y - a.y;
  const double d = 2.0 * (bx * cy - by * cx);
  const double b2 = bx * bx + by * by;
  const double c2 = cx * cx + cy * cy;
  return {a.x + (cy * b2 - by * c2) / d, a.y + (bx * c2 - cx * b2) / d};
}

// Subsegment handle: ta is a key of the per-circle sample map and tb is the
// key of its successor (the first key again when wrapping). Exact key
// equality makes staleness checks trivial after splits.
struct SegRef {
  int circle = -1;
  double ta = 0.0;
  double tb = 0.0;
  bool force = false;  // split even if the Gabriel test passes
};

// Directed subsegment record: the domain lies on the left of from -> to.
// ta/tb mirror the SegRef keys so a record can be turned back into a handle.
struct SegInfo {
  int from = -1;
  int to = -1;
  int circle = -1;
  double ta = 0.0;
  double tb = 0.0;
};

class Builder {
 public:
  Builder(const geom::Geometry& g, const MeshParams& mp)
      : geom_(g), params_(mp), tri_(1.5 * g.outer_radius) {
    circles_[0] = {{0.0, 0.0}, g.outer_radius, 1.0, -1, Marker::Outer, 0.0};
    circles_[1] = {g.center_upper(), g.radius, -1.0, -1, Marker::Inclusion1,
                   0.0};
    circles_[2] = {g.center_lower(), g.radius, 1.0, 1, Marker::Inclusion2,
                   0.0};
  }

  Mesh build() {
    for (int ci = 0; ci < 3; ++ci) sample_circle(ci);
    for (int ci = 0; ci < 3; ++ci) register_segments(ci);
    for (int ci = 0; ci < 3; ++ci) seed_encroachment(ci);
    refine();
    return extract();
  }

 private:
  double sizing_at(geom::Vec2 p) const {
    return geom::sizing(geom_, params_.sizing, p);
  }

  void check_cap() const {
    if (tri_.vertex_count() > params_.vertex_cap + 4) {
      std::ostringstream msg;
      msg << "mesh refinement exceeded the vertex cap of "
          << params_.vertex_cap << " (eps = " << geom_.eps
          << ", h_min = " << params_.sizing.h_min << ")";
      throw NumericalError(msg.str());
    }
  }

  // Boundary sampling: march half the circle from the symmetry axis with
  // steps following the sizing field, rescale so the march lands exactly on
  // pi, then mirror. Chords are capped well below the radius so that every
  // centroid-membership test stays on the correct side of the sagitta.
  void sample_circle(int ci) {
    const Circle& c = circles_[ci];
    const double cap = 0.4 * c.r;
    std::vector<double> steps;
    double t = 0.0;
    while (t < kPi) {
      const double len =
          std::max(std::min(sizing_at(circle_point(c, t)), cap),
                   params_.sizing.h_min);
      steps.push_back(len / c.r);
      t += len / c.r;
    }
    if (steps.size() < 8) steps.assign(8, kPi / 8.0);
    double total = 0.0;
    for (double dt : steps) total += dt;
    const double lam = kPi / total;

    std::vector<double> keys{-kPi, 0.0};
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < steps.size(); ++k) {
      acc += steps[k] * lam;
      keys.push_back(acc);
      keys.push_back(-acc);
    }
    std::sort(keys.begin(), keys.end());

    int hint = -1;
    for (double tk : keys) {
      const geom::Vec2 p = circle_point(circles_[ci], tk);
      const std::size_t before = tri_.vertex_count();
      const int vid = tri_.add_vertex(p.x, p.y, hint);
      if (vid < static_cast<int>(before))
        throw NumericalError(
            "boundary sampling produced coincident vertices; the sizing "
            "field is too small for the floating-point spacing");
      samples_[ci][tk] = vid;
      hint = tri_.incident_triangle(vid);
      check_cap();
    }
  }

  void register_segments(int ci) {
    auto& m = samples_[ci];
    double max_chord = 0.0;
    for (auto it = m.begin(); it != m.end(); ++it) {
      auto nx = std::next(it);
      const auto& to = (nx == m.end()) ? *m.begin() : *nx;
      add_seg_record(ci, it->first, to.first, it->second, to.second);
      max_chord = std::max(
          max_chord, std::sqrt(dist2(circle_point(circles_[ci], it->first),
                                     circle_point(circles_[ci], to.first))));
    }
    circles_[ci].max_chord = max_chord;
  }

  void seed_encroachment(int ci) {
    auto& m = samples_[ci];
    for (auto it = m.begin(); it != m.end(); ++it) {
      auto nx = std::next(it);
      const double tb = (nx == m.end()) ? m.begin()->first : nx->first;
      encq_.push_back({ci, it->first, tb, false});
    }
  }

  void add_seg_record(int ci, double ta, double tb, int va, int vb) {
    // va is the sample at key ta, vb at the successor key tb
    SegInfo info;
    info.circle = ci;
    info.ta = ta;
    info.tb = tb;
    if (circles_[ci].dir > 0) {
      info.from = va;
      info.to = vb;
    } else {
      info.from = vb;
      info.to = va;
    }
    segs_[edge_key(va, vb)] = info;
  }

  bool seg_current(const SegRef& s) const {
    const auto& m = samples_[s.circle];
    auto it = m.find(s.ta);
    if (it == m.end()) return false;
    auto nx = std::next(it);
    const double tb = (nx == m.end()) ? m.begin()->first : nx->first;
    return tb == s.tb;
  }

  std::pair<int, int> seg_vertices(const SegRef& s) const {
    const auto& m = samples_[s.circle];
    return {m.at(s.ta), m.at(s.tb)};
  }

  int edge_apex(int u, int v) const {
    const int t = tri_.directed_edge_triangle(u, v);
    if (t < 0) return -1;
    const auto& tr = tri_.tri(t);
    for (int i = 0; i < 3; ++i)
      if (tr.v[i] == u && tr.v[(i + 1) % 3] == v) return tr.v[(i + 2) % 3];
    return -1;
  }

  // Gabriel test through the two apexes: valid for Delaunay edges, because
  // any vertex inside the diametral ball would drag one of the apexes in
  // with it. A missing edge counts as encroached, which restores conformity.
  bool is_encroached(const SegRef& s) const {
    const auto [u, v] = seg_vertices(s);
    for (int pass = 0; pass < 2; ++pass) {
      const int apex = pass == 0 ? edge_apex(u, v) : edge_apex(v, u);
      if (apex < 0) return true;
      const double dux = tri_.x(u) - tri_.x(apex);
      const double duy = tri_.y(u) - tri_.y(apex);
      const double dvx = tri_.x(v) - tri_.x(apex);
      const double dvy = tri_.y(v) - tri_.y(apex);
      if (dux * dvx + duy * dvy < 0.0) return true;
    }
    return false;
  }

  bool in_domain(geom::Vec2 p) const {
    if (p.x * p.x + p.y * p.y >= geom_.outer_radius * geom_.outer_radius)
      return false;
    const double r2 = geom_.radius * geom_.radius;
    if (dist2(p, geom_.center_upper()) <= r2) return false;
    if (dist2(p, geom_.center_lower()) <= r2) return false;
    return true;
  }

  // Interior test for refinement. Triangles touching a subsegment are
  // classified by which side of the directed chord they occupy, which stays
  // correct even when a thin triangle's centroid dips inside the sagitta
  // region; all other triangles use the analytic centroid test.
  bool interior_triangle(int t, const TriShape& shape,
                         const SegInfo** chord = nullptr) const {
    const auto& tr = tri_.tri(t);
    for (int i = 0; i < 3; ++i) {
      const int a = tr.v[(i + 1) % 3];
      const int b = tr.v[(i + 2) % 3];
      auto it = segs_.find(edge_key(a, b));
      if (it == segs_.end()) continue;
      if (chord) *chord = &it->second;
      return it->second.from == a && it->second.to == b;
    }
    return in_domain(shape.centroid);
  }

  TriShape shape_of(int t) const {
    const auto& tr = tri_.tri(t);
    return tri_shape({tri_.x(tr.v[0]), tri_.y(tr.v[0])},
                     {tri_.x(tr.v[1]), tri_.y(tr.v[1])},
                     {tri_.x(tr.v[2]), tri_.y(tr.v[2])});
  }

  void maybe_queue_bad(int t) {
    const TriShape s = shape_of(t);
    if (!interior_triangle(t, s)) return;
    const double floor_rad = params_.angle_floor_deg * kPi / 180.0;
    const bool bad =
        s.min_angle < floor_rad || s.circumradius > sizing_at(s.centroid);
    if (bad) badq_.push({s.circumradius, t, tri_.generation(t)});
  }

  void queue_last_star() {
    for (int t : tri_.last_star()) maybe_queue_bad(t);
  }

  // All subsegments of circle ci whose diametral ball contains p. The window
  // bound uses the largest chord the circle ever had (chords only shrink).
  void encroached_by_point(geom::Vec2 p, std::vector<SegRef>& out) const {
    for (int ci = 0; ci < 3; ++ci) {
      const Circle& c = circles_[ci];
      const double ring = std::abs(std::sqrt(dist2(p, c.center)) - c.r);
      if (ring > 0.6 * c.max_chord) continue;
      const auto& m = samples_[ci];
      const double w = std::min(kPi, 1.6 * c.max_chord / c.r);
      const double tp = circle_param(c, p);
      auto test = [&](std::map<double, int>::const_iterator it) {
        auto nx = std::next(it);
        const auto& to = (nx == m.end()) ? *m.begin() : *nx;
        const geom::Vec2 a = circle_point(c, it->first);
        const geom::Vec2 b = circle_point(c, to.first);
        const geom::Vec2 mid{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
        if (dist2(p, mid) < 0.25 * dist2(a, b))
          out.push_back({ci, it->first, to.first, false});
      };
      auto scan = [&](double lo, double hi) {
        auto it = m.lower_bound(lo);
        if (it == m.begin())
          test(std::prev(m.end()));  // wrap predecessor
        else
          test(std::prev(it));
        for (; it != m.end() && it->first <= hi; ++it) test(it);
      };
      const double lo = tp - w, hi = tp + w;
      if (hi - lo >= 2.0 * kPi) {
        for (auto it = m.begin(); it != m.end(); ++it) test(it);
      } else {
        const double nlo = norm_param(lo);
        const double nhi = norm_param(hi);
        if (nlo <= nhi) {
          scan(nlo, nhi);
        } else {
          scan(-kPi, nhi);
          scan(nlo, kPi);
        }
      }
    }
  }

  void split_subsegment(const SegRef& s) {
    check_cap();
    const auto [u, v] = seg_vertices(s);
    const double span = s.tb > s.ta ? s.tb - s.ta : s.tb + 2.0 * kPi - s.ta;
    const double tm = norm_param(s.ta + 0.5 * span);
    const geom::Vec2 p = circle_point(circles_[s.circle], tm);
    int hint = tri_.directed_edge_triangle(u, v);
    if (hint < 0) hint = tri_.incident_triangle(u);
    const std::size_t before = tri_.vertex_count();
    const int w = tri_.add_vertex(p.x, p.y, hint);
    if (w < static_cast<int>(before)) {
      std::ostringstream msg;
      msg << "boundary split on " << marker_name(circles_[s.circle].marker)
          << " collided with an existing vertex; the requested resolution is "
             "below the floating-point spacing of the circle";
      throw NumericalError(msg.str());
    }
    samples_[s.circle][tm] = w;
    segs_.erase(edge_key(u, v));
    add_seg_record(s.circle, s.ta, tm, u, w);
    add_seg_record(s.circle, tm, s.tb, w, v);
    encq_.push_back({s.circle, s.ta, tm, false});
    encq_.push_back({s.circle, tm, s.tb, false});
    // The projected midpoint can encroach other subsegments (its own circle
    // or the opposite one across the gap); queue them now.
    std::vector<SegRef> hit;
    encroached_by_point(p, hit);
    for (auto& h : hit) encq_.push_back(h);
    queue_last_star();
  }

  // First boundary crossing of the segment p0 -> p1, as a subsegment handle.
  // Used when a circumcenter falls outside the domain: the subsegment that
  // hides it gets split instead.
  SegRef walk_crossing(geom::Vec2 p0, geom::Vec2 p1) const {
    double best_s = std::numeric_limits<double>::infinity();
    int best_ci = -1;
    const double dx = p1.x - p0.x;
    const double dy = p1.y - p0.y;
    for (int ci = 0; ci < 3; ++ci) {
      const Circle& c = circles_[ci];
      const double ex = p0.x - c.center.x;
      const double ey = p0.y - c.center.y;
      const double A = dx * dx + dy * dy;
      const double B = 2.0 * (ex * dx + ey * dy);
      const double C = ex * ex + ey * ey - c.r * c.r;
      const double disc = B * B - 4.0 * A * C;
      if (disc <= 0.0 || A == 0.0) continue;
      const double sq = std::sqrt(disc);
      for (double root : {(-B - sq) / (2.0 * A), (-B + sq) / (2.0 * A)}) {
        if (root > 1e-12 && root <= 1.0 && root < best_s) {
          best_s = root;
          best_ci = ci;
        }
      }
    }
    if (best_ci < 0)
      throw NumericalError(
          "refinement walk found no boundary crossing for an out-of-domain "
          "circumcenter");
    const geom::Vec2 q{p0.x + best_s * dx, p0.y + best_s * dy};
    const double tq = circle_param(circles_[best_ci], q);
    const auto& m = samples_[best_ci];
    auto it = m.upper_bound(tq);
    auto left = (it == m.begin()) ? std::prev(m.end()) : std::prev(it);
    auto nx = std::next(left);
    const double tb = (nx == m.end()) ? m.begin()->first : nx->first;
    return {best_ci, left->first, tb, true};
  }

  void refine() {
    // Seed the quality queue once conformity processing is underway.
    for (int t = 0; t < static_cast<int>(tri_.triangle_count()); ++t)
      maybe_queue_bad(t);
    while (true) {
      if (!encq_.empty()) {
        const SegRef s = encq_.front();
        encq_.pop_front();
        if (!seg_current(s)) continue;
        if (s.force || is_encroached(s)) split_subsegment(s);
        continue;
      }
      if (badq_.empty()) break;
      const auto [key, t, gen] = badq_.top();
      badq_.pop();
      if (gen != tri_.generation(t)) continue;
      const TriShape s = shape_of(t);
      if (!std::isfinite(s.circumradius)) continue;
      const geom::Vec2 cc = circumcenter(
          {tri_.x(tri_.tri(t).v[0]), tri_.y(tri_.tri(t).v[0])},
          {tri_.x(tri_.tri(t).v[1]), tri_.y(tri_.tri(t).v[1])},
          {tri_.x(tri_.tri(t).v[2]), tri_.y(tri_.tri(t).v[2])});
      std::vector<SegRef> hit;
      encroached_by_point(cc, hit);
      if (!hit.empty()) {
        // Rejected circumcenter: split what it would encroach, then retry.
        for (auto& h : hit) {
          h.force = true;
          encq_.push_back(h);
        }
        badq_.push({key, t, gen});
        continue;
      }
      if (!in_domain(cc)) {
        // The circumcenter is hidden behind a boundary. Split the chord in
        // the way: the one the triangle leans on when its own centroid dips
        // into the sagitta region, otherwise the first chord crossed on the
        // way from the centroid to the circumcenter.
        SegRef target;
        if (in_domain(s.centroid)) {
          target = walk_crossing(s.centroid, cc);
        } else {
          const SegInfo* chord = nullptr;
          interior_triangle(t, s, &chord);
          if (chord == nullptr) continue;
          target = {chord->circle, chord->ta, chord->tb, false};
        }
        target.force = true;
        encq_.push_back(target);
        badq_.push({key, t, gen});
        continue;
      }
      check_cap();
      const std::size_t before = tri_.vertex_count();
      const int vid = tri_.add_vertex(cc.x, cc.y, t);
      if (vid < static_cast<int>(before)) continue;  // coincided; drop
      queue_last_star();
    }
  }

  Mesh extract() {
    const int nt = static_cast<int>(tri_.triangle_count());
    std::vector<std::int8_t> cls(nt, 0);  // 1 exterior, 2 hole, 3 interior
    auto flood = [&](int seed, std::int8_t tag) {
      std::vector<int> stack{seed};
      while (!stack.empty()) {
        const int t = stack.back();
        stack.pop_back();
        if (t < 0 || cls[t] != 0) continue;
        cls[t] = tag;
        const auto& tr = tri_.tri(t);
        for (int i = 0; i < 3; ++i) {
          const int a = tr.v[(i + 1) % 3];
          const int b = tr.v[(i + 2) % 3];
          if (segs_.count(edge_key(a, b))) continue;  // do not cross boundary
          stack.push_back(tr.adj[i]);
        }
      }
    };
    flood(tri_.incident_triangle(0), 1);  // bbox corner vertex
    flood(tri_.locate(circles_[1].center.x, circles_[1].center.y), 2);
    flood(tri_.locate(circles_[2].center.x, circles_[2].center.y), 2);

    Mesh mesh;
    mesh.geometry = geom_;
    mesh.params = params_;

    std::vector<int> remap(tri_.vertex_count(), -1);
    std::vector<std::array<int, 3>> tris;
    for (int t = 0; t < nt; ++t) {
      if (cls[t] != 0) continue;
      const auto& tr = tri_.tri(t);
      const TriShape s = shape_of(t);
      if (!in_domain(s.centroid))
        throw NumericalError(
            "extracted a triangle whose centroid lies outside the domain; "
            "the boundary polygon is not conforming");
      tris.push_back({tr.v[0], tr.v[1], tr.v[2]});
      for (int v : tr.v) remap[v] = 0;
    }
    if (tris.empty())
      throw NumericalError("mesh extraction produced no interior triangles");

    int next_id = 0;
    for (std::size_t v = 0; v < remap.size(); ++v) {
      if (remap[v] == 0) {
        remap[v] = next_id++;
        mesh.vertices.push_back({tri_.x(static_cast<int>(v)),
                                 tri_.y(static_cast<int>(v))});
      } else {
        remap[v] = -1;
      }
    }
    mesh.triangles.reserve(tris.size());
    for (const auto& tr : tris)
      mesh.triangles.push_back({remap[tr[0]], remap[tr[1]], remap[tr[2]]});

    for (int ci = 0; ci < 3; ++ci) {
      const auto& m = samples_[ci];
      for (auto it = m.begin(); it != m.end(); ++it) {
        auto nx = std::next(it);
        const int va = it->second;
        const int vb = (nx == m.end()) ? m.begin()->second : nx->second;
        if (remap[va] < 0 || remap[vb] < 0)
          throw NumericalError(
              "boundary vertex lost during extraction; the boundary polygon "
              "is not conforming");
        BoundaryEdge e;
        e.marker = circles_[ci].marker;
        if (circles_[ci].dir > 0) {
          e.a = remap[va];
          e.b = remap[vb];
        } else {
          e.a = remap[vb];
          e.b = remap[va];
        }
        mesh.boundary.push_back(e);
      }
    }

    // Combinatorial closure: V - E + T = 1 - holes for a triangulated
    // region, and this domain has two holes.
    std::unordered_set<std::uint64_t> edges;
    for (const auto& tr : mesh.triangles)
      for (int i = 0; i < 3; ++i)
        edges.insert(edge_key(tr[i], tr[(i + 1) % 3]));
    const long euler = static_cast<long>(mesh.vertices.size()) -
                       static_cast<long>(edges.size()) +
                       static_cast<long>(mesh.triangles.size());
    if (euler != -1)
      throw NumericalError(
          "extracted mesh violates the two-hole Euler relation");
    return mesh;
  }

  geom::Geometry geom_;
  MeshParams params_;
  Triangulation tri_;
  Circle circles_[3];
  std::map<double, int> samples_[3];
  std::unordered_map<std::uint64_t, SegInfo> segs_;
  std::deque<SegRef> encq_;
  std::priority_queue<std::tuple<double, int, std::uint32_t>> badq_;
};

}  // namespace

Mesh generate_mesh(const geom::Geometry& g, const MeshParams& params) {
  geom::validate(g);
  geom::validate(g, params.sizing);
  validate(params);
  Builder b(g, params);
  return b.build();
}

namespace {

double edge_len(const Mesh& m, int a, int b) {
  return std::sqrt(dist2(m.vertices[a], m.vertices[b]));
}

}  // namespace

QualityReport mesh_quality(const Mesh& mesh) {
  QualityReport rep;
  rep.vertex_count = mesh.vertices.size();
  rep.triangle_count = mesh.triangles.size();
  auto complain = [&rep](const std::string& s) { rep.violations.push_back(s); };

  rep.min_angle_deg = 180.0;
  rep.max_angle_deg = 0.0;
  rep.min_edge = std::numeric_limits<double>::infinity();
  rep.max_edge = 0.0;
  std::unordered_map<std::uint64_t, int> edge_use;
  const double r_out2 = mesh.geometry.outer_radius * mesh.geometry.outer_radius;
  const double r2 = mesh.geometry.radius * mesh.geometry.radius;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tr = mesh.triangles[t];
    const geom::Vec2 a = mesh.vertices[tr[0]];
    const geom::Vec2 b = mesh.vertices[tr[1]];
    const geom::Vec2 c = mesh.vertices[tr[2]];
    const TriShape s = tri_shape(a, b, c);
    if (s.area <= 0.0)
      complain("triangle " + std::to_string(t) + " is not positively oriented");
    const geom::Vec2 cen = s.centroid;
    if (cen.x * cen.x + cen.y * cen.y >= r_out2 ||
        dist2(cen, mesh.geometry.center_upper()) <= r2 ||
        dist2(cen, mesh.geometry.center_lower()) <= r2)
      complain("triangle " + std::to_string(t) +
               " has its centroid outside the domain");
    const geom::Vec2 pts[3] = {a, b, c};
    for (int i = 0; i < 3; ++i) {
      ++edge_use[edge_key(tr[i], tr[(i + 1) % 3])];
      const geom::Vec2 e1{pts[(i + 1) % 3].x - pts[i].x,
                          pts[(i + 1) % 3].y - pts[i].y};
      const geom::Vec2 e2{pts[(i + 2) % 3].x - pts[i].x,
                          pts[(i + 2) % 3].y - pts[i].y};
      const double n1 = std::hypot(e1.x, e1.y);
      const double n2 = std::hypot(e2.x, e2.y);
      if (n1 == 0.0 || n2 == 0.0) {
        complain("triangle " + std::to_string(t) + " has a zero-length edge");
        continue;
      }
      double cosang = (e1.x * e2.x + e1.y * e2.y) / (n1 * n2);
      cosang = std::min(1.0, std::max(-1.0, cosang));
      const double ang = std::acos(cosang) * 180.0 / kPi;
      rep.min_angle_deg = std::min(rep.min_angle_deg, ang);
      rep.max_angle_deg = std::max(rep.max_angle_deg, ang);
    }
  }

  std::unordered_set<std::uint64_t> boundary_set;
  for (const auto& e : mesh.boundary) {
    ++rep.boundary_counts[static_cast<int>(e.marker)];
    if (!boundary_set.insert(edge_key(e.a, e.b)).second)
      complain("duplicate boundary edge");
  }
  for (const auto& [key, n] : edge_use) {
    const bool on_boundary = boundary_set.count(key) > 0;
    rep.min_edge = std::min(rep.min_edge,
                            edge_len(mesh, static_cast<int>(key >> 32),
                                     static_cast<int>(key & 0xffffffffu)));
    rep.max_edge = std::max(rep.max_edge,
                            edge_len(mesh, static_cast<int>(key >> 32),
                                     static_cast<int>(key & 0xffffffffu)));
    if (n == 2 && on_boundary)
      complain("boundary edge is shared by two triangles");
    else if (n == 1 && !on_boundary)
      complain("interior edge with a single triangle (hole in the mesh)");
    else if (n > 2)
      complain("edge shared by more than two triangles");
  }
  for (const auto& key : boundary_set)
    if (!edge_use.count(key))
      complain("boundary edge absent from the triangulation");

  // Marked vertices must sit on their circle; loops must close.
  rep.boundary_distance = 0.0;
  for (int mk = 0; mk < 3; ++mk) {
    const Marker marker = static_cast<Marker>(mk);
    geom::Vec2 center{0.0, 0.0};
    double radius = mesh.geometry.outer_radius;
    if (marker == Marker::Inclusion1) {
      center = mesh.geometry.center_upper();
      radius = mesh.geometry.radius;
    } else if (marker == Marker::Inclusion2) {
      center = mesh.geometry.center_lower();
      radius = mesh.geometry.radius;
    }
    std::unordered_map<int, int> succ;
    std::unordered_set<int> seen;
    for (const auto& e : mesh.boundary) {
      if (e.marker != marker) continue;
      if (!succ.emplace(e.a, e.b).second)
        complain(std::string(marker_name(marker)) +
                 " loop branches at a vertex");
      for (int v : {e.a, e.b}) {
        const double d = std::abs(
            std::sqrt(dist2(mesh.vertices[v], center)) - radius);
        rep.boundary_distance = std::max(rep.boundary_distance, d);
        seen.insert(v);
      }
    }
    if (succ.empty()) {
      complain(std::string(marker_name(marker)) + " loop is missing");
      continue;
    }
    // closed single cycle: follow successors from any start
    int start = succ.begin()->first;
    int cur = start;
    std::size_t steps = 0;
    do {
      auto it = succ.find(cur);
      if (it == succ.end()) {
        complain(std::string(marker_name(marker)) + " loop is not closed");
        break;
      }
      cur = it->second;
      ++steps;
    } while (cur != start && steps <= succ.size());
    if (cur == start && steps != succ.size())
      complain(std::string(marker_name(marker)) +
               " boundary splits into multiple loops");
    if (seen.size() != succ.size())
      complain(std::string(marker_name(marker)) +
               " loop has mismatched vertex/edge counts");
  }

  // Edge length against the sizing field at edge midpoints.
  rep.edge_to_sizing_min = std::numeric_limits<double>::infinity();
  rep.edge_to_sizing_max = 0.0;
  static const double bin_edges[7] = {0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0};
  for (const auto& [key, n] : edge_use) {
    (void)n;
    const int a = static_cast<int>(key >> 32);
    const int b = static_cast<int>(key & 0xffffffffu);
    const geom::Vec2 mid{0.5 * (mesh.vertices[a].x + mesh.vertices[b].x),
                         0.5 * (mesh.vertices[a].y + mesh.vertices[b].y)};
    const double s = geom::sizing(mesh.geometry, mesh.params.sizing, mid);
    const double ratio = edge_len(mesh, a, b) / s;
    rep.edge_to_sizing_min = std::min(rep.edge_to_sizing_min, ratio);
    rep.edge_to_sizing_max = std::max(rep.edge_to_sizing_max, ratio);
    int bin = 0;
    while (bin < 7 && ratio >= bin_edges[bin]) ++bin;
    ++rep.edge_to_sizing_histogram[bin];
  }
  std::sort(rep.violations.begin(), rep.violations.end());
  return rep;
}

void dump_mesh(std::ostream& out, const Mesh& mesh) {
  char buf[128];
  for (const auto& v : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "v %.17g %.17g\n", v.x, v.y);
    out << buf;
  }
  for (const auto& t : mesh.triangles) {
    std::snprintf(buf, sizeof buf, "t %d %d %d\n", t[0], t[1], t[2]);
    out << buf;
  }
  for (const auto& e : mesh.boundary) {
    std::snprintf(buf, sizeof buf, "b %d %d %s\n", e.a, e.b,
                  marker_name(e.marker));
    out << buf;
  }
}

Mesh load_mesh(std::istream& in, const geom::Geometry& g,
               const MeshParams& params) {
  Mesh mesh;
  mesh.geometry = g;
  mesh.params = params;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    auto fail = [&](const std::string& why) {
      throw ValidationError("mesh dump line " + std::to_string(lineno) +
                            ": " + why);
    };
    if (tag == "v") {
      double x, y;
      if (!(ls >> x >> y)) fail("expected two coordinates");
      mesh.vertices.push_back({x, y});
    } else if (tag == "t") {
      int i, j, k;
      if (!(ls >> i >> j >> k)) fail("expected three vertex indices");
      const int n = static_cast<int>(mesh.vertices.size());
      if (i < 0 || j < 0 || k < 0 || i >= n || j >= n || k >= n)
        fail("vertex index out of range");
      mesh.triangles.push_back({i, j, k});
    } else if (tag == "b") {
      int i, j;
      std::string name;
      if (!(ls >> i >> j >> name)) fail("expected two indices and a marker");
      const int n = static_cast<int>(mesh.vertices.size());
      if (i < 0 || j < 0 || i >= n || j >= n)
        fail("vertex index out of range");
      mesh.boundary.push_back({i, j, marker_from_name(name)});
    } else {
      fail("unknown record type '" + tag + "'");
    }
  }
  return mesh;
}

Mesh uniform_refine(const Mesh& mesh) {
  Mesh out;
  out.geometry = mesh.geometry;
  out.params = mesh.params;
  out.vertices = mesh.vertices;

  std::unordered_map<std::uint64_t, int> midpoint;
  auto plain_mid = [&](int a, int b) {
    const auto key = edge_key(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    const int id = static_cast<int>(out.vertices.size());
    out.vertices.push_back({0.5 * (mesh.vertices[a].x + mesh.vertices[b].x),
                            0.5 * (mesh.vertices[a].y + mesh.vertices[b].y)});
    midpoint.emplace(key, id);
    return id;
  };

  // Boundary midpoints first, projected to their exact circle.
  for (const auto& e : mesh.boundary) {
    geom::Vec2 center{0.0, 0.0};
    double radius = mesh.geometry.outer_radius;
    if (e.marker == Marker::Inclusion1) {
      center = mesh.geometry.center_upper();
      radius = mesh.geometry.radius;
    } else if (e.marker == Marker::Inclusion2) {
      center = mesh.geometry.center_lower();
      radius = mesh.geometry.radius;
    }
    geom::Vec2 m{0.5 * (mesh.vertices[e.a].x + mesh.vertices[e.b].x),
                 0.5 * (mesh.vertices[e.a].y + mesh.vertices[e.b].y)};
    const double d = std::hypot(m.x - center.x, m.y - center.y);
    if (d == 0.0) throw NumericalError("degenerate boundary edge midpoint");
    m = {center.x + radius * (m.x - center.x) / d,
         center.y + radius * (m.y - center.y) / d};
    const int id = static_cast<int>(out.vertices.size());
    out.vertices.push_back(m);
    midpoint.emplace(edge_key(e.a, e.b), id);
    out.boundary.push_back({e.a, id, e.marker});
    out.boundary.push_back({id, e.b, e.marker});
  }

  out.triangles.reserve(4 * mesh.triangles.size());
  for (const auto& t : mesh.triangles) {
    const int mab = plain_mid(t[0], t[1]);
    const int mbc = plain_mid(t[1], t[2]);
    const int mca = plain_mid(t[2], t[0]);
    out.triangles.push_back({t[0], mab, mca});
    out.triangles.push_back({t[1], mbc, mab});
    out.triangles.push_back({t[2], mca, mbc});
    out.triangles.push_back({mab, mbc, mca});
  }
  return out;
}

}  // namespace neckfield::meshing
