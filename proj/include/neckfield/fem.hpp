#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "neckfield/geometry.hpp"
#include "neckfield/mesh.hpp"
#include "neckfield/sparse.hpp"

// P1 discretization of the two-conductor problem: minimize
//   I[v] = int |grad v|^2 + gamma^{-1} sum_j int_{bdry j} |v - mean_j(v)|^2
// over fields matching the applied data on the container boundary. The
// inclusion potentials are the boundary means of the solution, and the
// mean subtraction makes each inclusion float at zero net flux.

namespace neckfield::fem {

// Applied boundary data, affine in the coordinates: a1*x + a2*y + c.
struct Phi {
  enum class Kind { X1, X2, Constant, Linear };
  Kind kind = Kind::X1;
  double a1 = 1.0;
  double a2 = 0.0;
  double c = 0.0;

  double operator()(geom::Vec2 p) const { return a1 * p.x + a2 * p.y + c; }
};

Phi phi_x1();
Phi phi_x2();
Phi phi_constant(double c);
Phi phi_linear(double a1, double a2);
std::string phi_spec(const Phi& phi);      // config-file form
Phi phi_from_spec(const std::string& s);   // throws ValidationError

struct RobinSystem {
  meshing::Mesh mesh;           // owning copy; gradients index its triangles
  double gamma = 1.0;
  sparse::CsrMatrix stiffness;  // full vertex space
  std::array<sparse::CsrMatrix, 2> boundary_mass;
  std::array<std::vector<double>, 2> mean_vector;  // w_j = M_j 1
  std::array<double, 2> boundary_length{};         // s_j = 1' M_j 1
  std::vector<int> outer_vertices;                 // ascending
  std::array<std::vector<int>, 2> inclusion_vertices;
};

// P1 Laplacian over all vertices (no boundary conditions applied). Throws
// NumericalError when a triangle degenerates (area below 1e-3 * h_min^2),
// naming the element.
sparse::CsrMatrix p1_stiffness(const meshing::Mesh& mesh);

// Builds the stiffness and boundary forms; requires both inclusion loops
// and the container loop to be present. Same degeneracy error as
// p1_stiffness.
RobinSystem assemble(const meshing::Mesh& mesh, double gamma);

struct SolverParams {
  double rtol = 1e-10;
  int max_iterations = 50000;
  // Dense Cholesky handles systems up to this many free unknowns; larger
  // systems run preconditioned conjugate gradients. The dense path doubles
  // as the reference oracle in tests.
  std::size_t direct_limit = 2000;
  bool force_iterative = false;
  bool force_direct = false;
};

struct FieldSolution {
  std::vector<double> u;                 // one value per vertex
  std::array<double, 2> inclusion_potential{};
  std::vector<geom::Vec2> gradient;      // one constant gradient per triangle
  std::array<double, 2> flux{};          // residual tested with the loop indicator
  double energy = 0.0;
  double gradient_norm_l2 = 0.0;         // sqrt(int |grad u|^2)
  int iterations = 0;                    // 0 on the dense path
  double residual = 0.0;                 // true relative residual
  bool direct = false;
  double max_principle_overshoot = 0.0;  // max(0, max u - max bdry, min bdry - min u)
};

// Throws NumericalError if the iterative solver fails to converge.
FieldSolution solve(const RobinSystem& sys, const Phi& phi,
                    const SolverParams& params = {});

// Discrete energy of an arbitrary nodal field against the assembled forms.
double energy(const std::vector<double>& values, const RobinSystem& sys);

struct GradientExtremum {
  double value = 0.0;
  geom::Vec2 location;  // centroid of the attaining triangle
};

// Largest |gradient| over triangles whose centroid lies in the window.
// Throws ValidationError when the window contains no centroid.
GradientExtremum max_gradient(const FieldSolution& sol, const RobinSystem& sys,
                              const geom::NeckWindow& window);

// One record per line: "u <vertex index> <value>" with 17 significant
// digits, followed by a key=value summary block (U1, U2, flux1, flux2,
// energy, iterations, residual).
void dump_solution(std::ostream& out, const FieldSolution& sol);

}  // namespace neckfield::fem
