#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "neckfield/errors.hpp"
#include "neckfield/fem.hpp"
#include "neckfield/kernels.hpp"
#include "neckfield/mesh.hpp"

using namespace neckfield;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Unit square split into four triangles around the center vertex.
meshing::Mesh square_fixture() {
  meshing::Mesh m;
  m.vertices = {{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}};
  m.triangles = {{0, 1, 4}, {1, 2, 4}, {2, 3, 4}, {3, 0, 4}};
  return m;
}

// Small two-disk mesh whose free-vertex count stays under the dense-oracle
// threshold used by the solver comparison tests.
meshing::Mesh coarse_mesh() {
  geom::Geometry g;
  g.eps = 0.1;
  meshing::MeshParams mp;
  mp.sizing.theta = 0.5;
  mp.sizing.h_max = 0.5;
  return meshing::generate_mesh(g, mp);
}

double csr_entry(const sparse::CsrMatrix& m, int r, int c) {
  for (std::int32_t p = m.rowptr[r]; p < m.rowptr[r + 1]; ++p) {
    if (m.col[p] == c) return m.val[p];
  }
  return 0.0;
}

double max_abs_row_sum(const sparse::CsrMatrix& m) {
  double worst = 0.0;
  for (std::size_t r = 0; r < m.n; ++r) {
    double s = 0.0;
    for (std::int32_t p = m.rowptr[r]; p < m.rowptr[r + 1]; ++p) {
      s += std::abs(m.val[p]);
    }
    worst = std::max(worst, s);
  }
  return worst;
}

double linf_relative(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return diff / scale;
}

}  // namespace

TEST_CASE("stiffness on the criss-cross square matches the hand stencil") {
  const auto k = fem::p1_stiffness(square_fixture());
  REQUIRE(k.n == 5);
  // Corners: unit diagonal, -1 to the center, exact zero to the adjacent
  // corners (the two triangle contributions cancel).
  for (int c = 0; c < 4; ++c) {
    CHECK(csr_entry(k, c, c) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(csr_entry(k, c, 4) == doctest::Approx(-1.0).epsilon(1e-14));
  }
  CHECK(csr_entry(k, 0, 1) == doctest::Approx(0.0));
  CHECK(csr_entry(k, 1, 2) == doctest::Approx(0.0));
  CHECK(csr_entry(k, 4, 4) == doctest::Approx(4.0).epsilon(1e-14));

  // Dirichlet energy of v = x1 equals the fixture area.
  std::vector<double> v = {0, 1, 1, 0, 0.5};
  std::vector<double> kv(5);
  k.multiply(v.data(), kv.data());
  CHECK(kernels::dot(v.data(), kv.data(), 5) ==
        doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("degenerate triangle fails assembly naming the element") {
  auto m = square_fixture();
  m.vertices[4] = {0.5, 1e-18};
  m.params.sizing.h_min = 1e-5;
  CHECK_THROWS_AS(fem::p1_stiffness(m), NumericalError);
  try {
    fem::p1_stiffness(m);
  } catch (const NumericalError& e) {
    const std::string what = e.what();
    CHECK(what.find("triangle 0") != std::string::npos);
    CHECK(what.find("degeneracy floor") != std::string::npos);
  }
}

TEST_CASE("boundary data specs round-trip and reject malformed input") {
  CHECK(fem::phi_spec(fem::phi_x1()) == "X1");
  CHECK(fem::phi_spec(fem::phi_x2()) == "X2");

  const fem::Phi lin = fem::phi_from_spec("  LINEAR( -0.25 , 1e-3 ) ");
  CHECK(lin.a1 == doctest::Approx(-0.25));
  CHECK(lin.a2 == doctest::Approx(1e-3));
  CHECK(lin({2.0, 1.0}) == doctest::Approx(-0.5 + 1e-3));

  const fem::Phi c = fem::phi_from_spec(fem::phi_spec(fem::phi_constant(2.5)));
  CHECK(c.kind == fem::Phi::Kind::Constant);
  CHECK(c({3.0, -4.0}) == doctest::Approx(2.5));

  for (const char* bad : {"X3", "CONSTANT()", "CONSTANT(1,2)", "LINEAR(1)",
                          "CONSTANT(abc)", "LINEAR(1,2,3)", ""}) {
    CHECK_THROWS_AS(fem::phi_from_spec(bad), ValidationError);
  }
}

TEST_CASE("assembled system invariants on a two-disk mesh") {
  const auto mesh = coarse_mesh();
  const auto sys = fem::assemble(mesh, 2.0);

  CHECK_THROWS_AS(fem::assemble(mesh, 0.0), ValidationError);
  CHECK_THROWS_AS(fem::assemble(mesh, -1.0), ValidationError);

  // Discrete loop lengths agree with each other and sit within the
  // polygonal error of the circumference.
  CHECK(sys.boundary_length[0] ==
        doctest::Approx(sys.boundary_length[1]).epsilon(1e-13));
  CHECK(std::abs(sys.boundary_length[0] - 2 * kPi) < 0.03);

  // s_j is the total mass of M_j (w_j = M_j 1 summed).
  for (int j = 0; j < 2; ++j) {
    std::vector<double> ones(mesh.vertices.size(), 1.0);
    std::vector<double> m1(mesh.vertices.size());
    sys.boundary_mass[j].multiply(ones.data(), m1.data());
    CHECK(kernels::dot(ones.data(), m1.data(), ones.size()) ==
          doctest::Approx(sys.boundary_length[j]).epsilon(1e-13));
  }

  // Stiffness is symmetric: v'Kw == w'Kv for random vectors.
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  std::vector<double> v(mesh.vertices.size()), w(mesh.vertices.size());
  for (auto& x : v) x = nd(rng);
  for (auto& x : w) x = nd(rng);
  std::vector<double> tmp(mesh.vertices.size());
  sys.stiffness.multiply(v.data(), tmp.data());
  const double wkv = kernels::dot(w.data(), tmp.data(), w.size());
  sys.stiffness.multiply(w.data(), tmp.data());
  const double vkw = kernels::dot(v.data(), tmp.data(), v.size());
  CHECK(wkv == doctest::Approx(vkw).epsilon(1e-10));

  // Constants lie in the kernel of the full form.
  std::vector<double> ones(mesh.vertices.size(), 1.0);
  CHECK(fem::energy(ones, sys) <= 1e-10 * max_abs_row_sum(sys.stiffness));

  CHECK_THROWS_AS(fem::energy(std::vector<double>(3, 0.0), sys),
                  ValidationError);
  std::vector<double> nan_field(mesh.vertices.size(), 0.0);
  nan_field[0] = std::nan("");
  CHECK_THROWS_AS(fem::energy(nan_field, sys), ValidationError);
}

TEST_CASE("constant boundary data propagates exactly") {
  const auto sys = fem::assemble(coarse_mesh(), 2.0);
  const auto sol = fem::solve(sys, fem::phi_constant(2.5));
  CHECK(sol.direct);
  for (const double u : sol.u) {
    CHECK(u == doctest::Approx(2.5).epsilon(1e-12));
  }
  CHECK(sol.inclusion_potential[0] == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(sol.inclusion_potential[1] == doctest::Approx(2.5).epsilon(1e-12));
  for (const auto g : sol.gradient) {
    CHECK(std::hypot(g.x, g.y) < 1e-12);
  }
  CHECK(std::abs(sol.flux[0]) < 1e-12);
  CHECK(std::abs(sol.flux[1]) < 1e-12);
  CHECK(sol.energy < 1e-12);
  CHECK(sol.max_principle_overshoot < 1e-12);
}

TEST_CASE("neutral configuration reproduces the linear field") {
  // gamma = R makes u = x1 the exact solution; the discrete error is pure
  // discretization (polygonal boundary + trace quadrature).
  const auto mesh = coarse_mesh();
  const auto sys = fem::assemble(mesh, 1.0);
  const auto sol = fem::solve(sys, fem::phi_x1());

  std::vector<double> exact(mesh.vertices.size());
  for (std::size_t i = 0; i < exact.size(); ++i) exact[i] = mesh.vertices[i].x;
  CHECK(linf_relative(sol.u, exact) < 5e-3);

  CHECK(std::abs(sol.inclusion_potential[0]) < 1e-3);
  CHECK(std::abs(sol.inclusion_potential[1]) < 1e-3);

  const auto mg = fem::max_gradient(sol, sys, {0.0, 0.25});
  CHECK(mg.value == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("iterative and dense paths agree to oracle tolerance") {
  const auto mesh = coarse_mesh();
  const auto sys = fem::assemble(mesh, 2.0);
  const std::size_t free_count =
      mesh.vertices.size() - sys.outer_vertices.size();
  REQUIRE(free_count <= 300);

  fem::SolverParams dense, iterative;
  dense.force_direct = true;
  iterative.force_iterative = true;
  const auto sd = fem::solve(sys, fem::phi_x1(), dense);
  const auto si = fem::solve(sys, fem::phi_x1(), iterative);
  CHECK(sd.direct);
  CHECK(!si.direct);
  CHECK(si.iterations > 0);
  CHECK(si.residual < 1e-9);
  CHECK(linf_relative(si.u, sd.u) < 1e-8);

  fem::SolverParams bad;
  bad.force_direct = bad.force_iterative = true;
  CHECK_THROWS_AS(fem::solve(sys, fem::phi_x1(), bad), ValidationError);
  bad = {};
  bad.rtol = 0.0;
  CHECK_THROWS_AS(fem::solve(sys, fem::phi_x1(), bad), ValidationError);

  // Starving the iteration budget raises the non-convergence error with the
  // residual history attached.
  fem::SolverParams starved;
  starved.force_iterative = true;
  starved.max_iterations = 2;
  CHECK_THROWS_AS(fem::solve(sys, fem::phi_x1(), starved), NumericalError);
  try {
    fem::solve(sys, fem::phi_x1(), starved);
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("residual history") != std::string::npos);
  }
}

TEST_CASE("zero-net-flux identity and edge-quadrature cross-check") {
  const auto sys = fem::assemble(coarse_mesh(), 2.0);
  const auto sol = fem::solve(sys, fem::phi_x1());
  const double flux_tol = 1e-8 * sol.gradient_norm_l2;
  for (int j = 0; j < 2; ++j) {
    CHECK(std::abs(sol.flux[j]) <= flux_tol);
    // Direct quadrature of gamma^{-1} (u - U_j) over the loop polygon.
    const double wu = kernels::dot(sys.mean_vector[j].data(), sol.u.data(),
                                   sol.u.size());
    const double quad =
        (sys.boundary_length[j] * sol.inclusion_potential[j] - wu) / sys.gamma;
    CHECK(std::abs(quad - sol.flux[j]) < 1e-12);
  }
}

TEST_CASE("inclusion potentials follow the data symmetry") {
  const auto sys = fem::assemble(coarse_mesh(), 2.0);

  // Odd-in-x2 data on the x2-symmetric pair: opposite potentials.
  const auto s2 = fem::solve(sys, fem::phi_x2());
  CHECK(std::abs(s2.inclusion_potential[0] + s2.inclusion_potential[1]) <
        1e-3);
  // Potentials stay inside the data range on the container.
  const double bound = 5.0 + 1e-6;
  CHECK(std::abs(s2.inclusion_potential[0]) <= bound);
  CHECK(std::abs(s2.inclusion_potential[1]) <= bound);
  CHECK(s2.max_principle_overshoot <= 1e-3 * 10.0);
}

TEST_CASE("superposition and mirror equivariance") {
  const auto mesh = coarse_mesh();
  const auto sys = fem::assemble(mesh, 2.0);
  const auto s1 = fem::solve(sys, fem::phi_x1());
  const auto s2 = fem::solve(sys, fem::phi_x2());
  const auto s12 = fem::solve(sys, fem::phi_linear(1.0, 1.0));
  std::vector<double> sum(s1.u.size());
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = s1.u[i] + s2.u[i];
  CHECK(linf_relative(sum, s12.u) < 1e-8);

  // Reflect the mesh across x1 = 0 (swapping two vertices restores CCW) and
  // solve with the reflected data phi(-x1, x2) = -x1.
  meshing::Mesh ref = mesh;
  for (auto& v : ref.vertices) v.x = -v.x;
  for (auto& t : ref.triangles) std::swap(t[1], t[2]);
  for (auto& e : ref.boundary) std::swap(e.a, e.b);
  const auto rsys = fem::assemble(ref, 2.0);
  const auto sr = fem::solve(rsys, fem::phi_x1());
  std::vector<double> negated(sr.u.size());
  for (std::size_t i = 0; i < negated.size(); ++i) negated[i] = -sr.u[i];
  CHECK(linf_relative(negated, s1.u) < 1e-8);
}

TEST_CASE("solved field minimizes the energy among admissible fields") {
  const auto sys = fem::assemble(coarse_mesh(), 2.0);
  const auto sol = fem::solve(sys, fem::phi_x1());
  std::mt19937_64 rng(1234);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> delta(sol.u.size());
    for (auto& d : delta) d = nd(rng);
    for (const int v : sys.outer_vertices) delta[v] = 0.0;
    const double nrm = kernels::nrm2(delta.data(), delta.size());
    std::vector<double> perturbed = sol.u;
    for (std::size_t i = 0; i < perturbed.size(); ++i) {
      perturbed[i] += 1e-3 * delta[i] / nrm;
    }
    CHECK(fem::energy(perturbed, sys) > sol.energy);
  }
}

TEST_CASE("energy does not increase under refinement (interpolated field)") {
  const auto mesh = coarse_mesh();
  const auto fine = meshing::uniform_refine(mesh);
  const auto sys = fem::assemble(mesh, 2.0);
  const auto fsys = fem::assemble(fine, 2.0);
  const auto uc = fem::solve(sys, fem::phi_x1());
  const auto uf = fem::solve(fsys, fem::phi_x1());

  // Interpolate the coarse solution onto the refined mesh: original
  // vertices keep their values; each midpoint averages its two coarse
  // parents (recovered through the corner triangles of the refinement).
  std::vector<double> interp(fine.vertices.size(), 0.0);
  std::vector<double> acc(fine.vertices.size(), 0.0);
  std::vector<int> cnt(fine.vertices.size(), 0);
  const int vc = static_cast<int>(mesh.vertices.size());
  for (int i = 0; i < vc; ++i) interp[i] = uc.u[i];
  for (const auto& t : fine.triangles) {
    for (int i = 0; i < 3; ++i) {
      const int a = t[i], b = t[(i + 1) % 3];
      if (a >= vc && b < vc) { acc[a] += uc.u[b]; ++cnt[a]; }
      if (b >= vc && a < vc) { acc[b] += uc.u[a]; ++cnt[b]; }
    }
  }
  for (std::size_t i = vc; i < fine.vertices.size(); ++i) {
    REQUIRE(cnt[i] >= 2);
    interp[i] = acc[i] / cnt[i];
  }
  // Re-impose the boundary data at the (projected) fine Dirichlet vertices
  // so the comparison field is admissible for the fine problem.
  for (const int v : fsys.outer_vertices) interp[v] = fine.vertices[v].x;

  CHECK(uf.energy <= fem::energy(interp, fsys) * (1 + 1e-8));
}

TEST_CASE("max gradient windowing and failure modes") {
  const auto sys = fem::assemble(coarse_mesh(), 1.0);
  const auto sol = fem::solve(sys, fem::phi_x1());
  CHECK_THROWS_AS(fem::max_gradient(sol, sys, {0.0, 1e-7}), ValidationError);
  CHECK_THROWS_AS(fem::max_gradient(sol, sys, {0.4, 0.2}), ValidationError);
  const auto mg = fem::max_gradient(sol, sys, {0.0, 0.25});
  CHECK(std::abs(mg.location.x) <= 0.25);
}

TEST_CASE("solution dump carries nodal values and the summary block") {
  const auto sys = fem::assemble(coarse_mesh(), 2.0);
  const auto sol = fem::solve(sys, fem::phi_constant(1.5));
  std::ostringstream out;
  fem::dump_solution(out, sol);
  const std::string text = out.str();
  CHECK(text.find("u 0 1.5") != std::string::npos);
  CHECK(text.find("U1=1.5") != std::string::npos);
  CHECK(text.find("flux1=") != std::string::npos);
  CHECK(text.find("energy=") != std::string::npos);
  CHECK(text.find("iterations=0") != std::string::npos);
  CHECK(text.find("residual=") != std::string::npos);
}

TEST_CASE("neutral field accuracy on the production sizing") {
  // Default sizing at eps = 1e-2; the iterative path engages and the
  // discrete field tracks x1 to a few parts in 1e4.
  geom::Geometry g;
  g.eps = 1e-2;
  const auto mesh = meshing::generate_mesh(g, meshing::MeshParams{});
  const auto sys = fem::assemble(mesh, 1.0);
  const auto sol = fem::solve(sys, fem::phi_x1());
  CHECK(!sol.direct);

  std::vector<double> exact(mesh.vertices.size());
  for (std::size_t i = 0; i < exact.size(); ++i) exact[i] = mesh.vertices[i].x;
  CHECK(linf_relative(sol.u, exact) < 1e-3);

  const auto mg = fem::max_gradient(sol, sys, {0.0, 0.1});
  CHECK(mg.value == doctest::Approx(1.0).epsilon(5e-3));
  CHECK(std::abs(sol.flux[0]) <= 1e-8 * sol.gradient_norm_l2);
  CHECK(std::abs(sol.flux[1]) <= 1e-8 * sol.gradient_norm_l2);
}

TEST_CASE("loop-length convergence is second order under refinement") {
  auto mesh = coarse_mesh();
  double prev_err = 0.0;
  for (int level = 0; level < 3; ++level) {
    const auto sys = fem::assemble(mesh, 2.0);
    const double err = std::abs(sys.boundary_length[0] - 2 * kPi);
    if (level > 0) {
      const double order = std::log2(prev_err / err);
      CHECK(order > 1.9);
      CHECK(order < 2.1);
    }
    prev_err = err;
    if (level < 2) mesh = meshing::uniform_refine(mesh);
  }
}
