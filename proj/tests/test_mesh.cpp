#include "neckfield/mesh.hpp"

#include "doctest.h"

#include <cmath>
#include <set>
#include <sstream>

#include "neckfield/errors.hpp"

using namespace neckfield;

namespace {

meshing::Mesh make_mesh(double eps, double theta, double h_min, double h_max) {
  geom::Geometry g;
  g.eps = eps;
  meshing::MeshParams mp;
  mp.sizing.theta = theta;
  mp.sizing.h_min = h_min;
  mp.sizing.h_max = h_max;
  return meshing::generate_mesh(g, mp);
}

std::string dump_string(const meshing::Mesh& m) {
  std::ostringstream os;
  meshing::dump_mesh(os, m);
  return os.str();
}

std::size_t neck_triangle_count(const meshing::Mesh& m) {
  const geom::NeckWindow win{0.0, std::sqrt(m.geometry.eps)};
  std::size_t count = 0;
  for (const auto& t : m.triangles) {
    geom::Vec2 c{0.0, 0.0};
    for (int k = 0; k < 3; ++k) {
      c.x += m.vertices[t[k]].x / 3.0;
      c.y += m.vertices[t[k]].y / 3.0;
    }
    if (geom::neck_membership(m.geometry, win, c)) ++count;
  }
  return count;
}

// Combinatorial edge count (each undirected edge once).
std::size_t edge_count(const meshing::Mesh& m) {
  std::set<std::pair<int, int>> edges;
  for (const auto& t : m.triangles)
    for (int i = 0; i < 3; ++i)
      edges.insert(std::minmax(t[i], t[(i + 1) % 3]));
  return edges.size();
}

}  // namespace

TEST_CASE("marker names round trip") {
  for (auto m : {meshing::Marker::Outer, meshing::Marker::Inclusion1,
                 meshing::Marker::Inclusion2})
    CHECK(meshing::marker_from_name(meshing::marker_name(m)) == m);
  CHECK_THROWS_AS(meshing::marker_from_name("SIDEWALL"), ValidationError);
}

TEST_CASE("generated mesh satisfies every structural invariant") {
  const meshing::Mesh m = make_mesh(0.1, 0.5, 1e-5, 0.5);
  const meshing::QualityReport q = meshing::mesh_quality(m);
  for (const auto& v : q.violations) INFO("violation: ", v);
  CHECK(q.violations.empty());
  CHECK(q.min_angle_deg >= 20.0);
  CHECK(q.boundary_distance <= 1e-12 * m.geometry.radius);
  CHECK(q.vertex_count == m.vertices.size());
  CHECK(q.boundary_counts[0] > 0);
  CHECK(q.boundary_counts[1] > 0);
  CHECK(q.boundary_counts[2] > 0);
  // Two holes: V - E + T = 1 - holes.
  const long euler = static_cast<long>(m.vertices.size()) -
                     static_cast<long>(edge_count(m)) +
                     static_cast<long>(m.triangles.size());
  CHECK(euler == -1);
  // Mirror symmetry of the configuration shows up as equal inclusion loops.
  CHECK(q.boundary_counts[1] == q.boundary_counts[2]);
}

TEST_CASE("edge lengths track the sizing field within a factor 2") {
  for (double eps : {1e-2, 1e-3}) {
    const meshing::Mesh m = make_mesh(eps, 0.25, 1e-5, 0.2);
    const meshing::QualityReport q = meshing::mesh_quality(m);
    for (const auto& v : q.violations) INFO("violation: ", v);
    CHECK(q.violations.empty());
    CHECK(q.min_angle_deg >= 20.0);
    CHECK(q.edge_to_sizing_max < 2.0);
    CHECK(q.edge_to_sizing_min > 0.25);
  }
}

TEST_CASE("quality report on a hand-built criss-cross square") {
  meshing::Mesh m;
  m.vertices = {{-1.0, -1.0}, {1.0, -1.0}, {1.0, 1.0}, {-1.0, 1.0},
                {0.0, 0.0}};
  m.triangles = {{0, 1, 4}, {1, 2, 4}, {2, 3, 4}, {3, 0, 4}};
  // No boundary records: only the angle statistics are meaningful here.
  const meshing::QualityReport q = meshing::mesh_quality(m);
  CHECK(q.min_angle_deg == doctest::Approx(45.0).epsilon(1e-12));
  CHECK(q.max_angle_deg == doctest::Approx(90.0).epsilon(1e-12));
}

TEST_CASE("meshing is deterministic: bit-identical dumps") {
  const meshing::Mesh a = make_mesh(1e-3, 0.25, 1e-5, 0.2);
  const meshing::Mesh b = make_mesh(1e-3, 0.25, 1e-5, 0.2);
  CHECK(dump_string(a) == dump_string(b));
}

TEST_CASE("dump/load round trip reproduces the mesh exactly") {
  const meshing::Mesh a = make_mesh(1e-2, 0.25, 1e-5, 0.2);
  const std::string d = dump_string(a);
  std::istringstream is(d);
  const meshing::Mesh b = meshing::load_mesh(is, a.geometry, a.params);
  CHECK(dump_string(b) == d);
  CHECK(meshing::mesh_quality(b).violations.empty());

  std::istringstream bad("v 0 0\nt 0 1 2\n");
  CHECK_THROWS_AS(meshing::load_mesh(bad, a.geometry, a.params),
                  ValidationError);
  std::istringstream junk("v 0 0\nq 1 2\n");
  CHECK_THROWS_AS(meshing::load_mesh(junk, a.geometry, a.params),
                  ValidationError);
}

TEST_CASE("uniform refinement preserves validity and boundary placement") {
  const meshing::Mesh a = make_mesh(1e-2, 0.25, 1e-5, 0.2);
  const meshing::Mesh r = meshing::uniform_refine(a);
  CHECK(r.triangles.size() == 4 * a.triangles.size());
  CHECK(r.boundary.size() == 2 * a.boundary.size());
  const meshing::QualityReport q = meshing::mesh_quality(r);
  for (const auto& v : q.violations) INFO("violation: ", v);
  CHECK(q.violations.empty());
  CHECK(q.boundary_distance <= 1e-12 * a.geometry.radius);
}

TEST_CASE("halving h_min in the clamp regime scales the neck population") {
  // With h_min at or above theta*eps the clamp dominates the neck, so
  // halving it refines the window without crossing the one-to-two element
  // layer transition.
  const meshing::Mesh coarse = make_mesh(1e-3, 0.25, 2e-3, 0.2);
  const meshing::Mesh fine = make_mesh(1e-3, 0.25, 1e-3, 0.2);
  const double factor = static_cast<double>(neck_triangle_count(fine)) /
                        static_cast<double>(neck_triangle_count(coarse));
  INFO("neck count ", neck_triangle_count(coarse), " -> ",
       neck_triangle_count(fine));
  CHECK(factor >= 1.5);
  CHECK(factor <= 3.0);
}

TEST_CASE("vertex cap failure names the parameters") {
  geom::Geometry g;
  g.eps = 1e-3;
  meshing::MeshParams mp;
  mp.sizing.theta = 0.25;
  mp.sizing.h_min = 1e-5;
  mp.sizing.h_max = 0.2;
  mp.vertex_cap = 500;  // far below what this mesh needs
  CHECK_THROWS_AS(meshing::generate_mesh(g, mp), NumericalError);
  try {
    meshing::generate_mesh(g, mp);
  } catch (const NumericalError& e) {
    const std::string what = e.what();
    CHECK(what.find("cap") != std::string::npos);
  }
}

TEST_CASE("mesh parameter validation") {
  meshing::MeshParams mp;
  mp.angle_floor_deg = 0.0;
  CHECK_THROWS_AS(meshing::validate(mp), ValidationError);
  mp.angle_floor_deg = 33.0;  // termination is not guaranteed past ~30
  CHECK_THROWS_AS(meshing::validate(mp), ValidationError);
  mp = meshing::MeshParams{};
  mp.vertex_cap = 10;
  CHECK_THROWS_AS(meshing::validate(mp), ValidationError);
}
