#include "neckfield/fem.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <utility>

#include "neckfield/errors.hpp"
#include "neckfield/kernels.hpp"

namespace neckfield::fem {

namespace {

// P1 element geometry: signed doubled area and the constant gradient of
// each hat function. Triangles are stored CCW, so twice_area > 0 on a
// valid mesh.
struct TriGeom {
  double area = 0.0;
  geom::Vec2 grad[3];
};

TriGeom tri_geometry(const meshing::Mesh& mesh, std::size_t t) {
  const auto& tri = mesh.triangles[t];
  const geom::Vec2 p0 = mesh.vertices[tri[0]];
  const geom::Vec2 p1 = mesh.vertices[tri[1]];
  const geom::Vec2 p2 = mesh.vertices[tri[2]];
  const double twice =
      (p1.x - p0.x) * (p2.y - p0.y) - (p1.y - p0.y) * (p2.x - p0.x);
  TriGeom g;
  g.area = 0.5 * twice;
  g.grad[0] = {(p1.y - p2.y) / twice, (p2.x - p1.x) / twice};
  g.grad[1] = {(p2.y - p0.y) / twice, (p0.x - p2.x) / twice};
  g.grad[2] = {(p0.y - p1.y) / twice, (p1.x - p0.x) / twice};
  return g;
}

void sort_unique(std::vector<int>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

// Dirichlet-reduced operator: the sparse block plus the matrix-free
// mean-subtraction terms, y = A_sparse x - sum_j (w_j' x) / (gamma s_j) w_j
// with w_j stored compressed over its (free) support.
class ReducedOperator : public sparse::LinearOperator {
 public:
  ReducedOperator(const sparse::CsrMatrix& a,
                  std::array<std::vector<std::int32_t>, 2> idx,
                  std::array<std::vector<double>, 2> val,
                  std::array<double, 2> scale)
      : a_(a), idx_(std::move(idx)), val_(std::move(val)), scale_(scale) {}

  std::size_t size() const override { return a_.n; }

  void apply(const double* x, double* y) const override {
    a_.multiply(x, y);
    for (int j = 0; j < 2; ++j) {
      double wx = 0.0;
      for (std::size_t k = 0; k < idx_[j].size(); ++k) {
        wx += val_[j][k] * x[idx_[j][k]];
      }
      const double coef = scale_[j] * wx;
      for (std::size_t k = 0; k < idx_[j].size(); ++k) {
        y[idx_[j][k]] -= coef * val_[j][k];
      }
    }
  }

 private:
  const sparse::CsrMatrix& a_;
  std::array<std::vector<std::int32_t>, 2> idx_;
  std::array<std::vector<double>, 2> val_;
  std::array<double, 2> scale_;
};

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Phi phi_x1() { return {Phi::Kind::X1, 1.0, 0.0, 0.0}; }
Phi phi_x2() { return {Phi::Kind::X2, 0.0, 1.0, 0.0}; }
Phi phi_constant(double c) { return {Phi::Kind::Constant, 0.0, 0.0, c}; }
Phi phi_linear(double a1, double a2) {
  return {Phi::Kind::Linear, a1, a2, 0.0};
}

std::string phi_spec(const Phi& phi) {
  switch (phi.kind) {
    case Phi::Kind::X1:
      return "X1";
    case Phi::Kind::X2:
      return "X2";
    case Phi::Kind::Constant:
      return "CONSTANT(" + format_double(phi.c) + ")";
    case Phi::Kind::Linear:
      return "LINEAR(" + format_double(phi.a1) + "," + format_double(phi.a2) +
             ")";
  }
  throw ValidationError("boundary data has an unknown kind");
}

namespace {

// Parses the arguments of CONSTANT(c) or LINEAR(a1,a2); `body` is the text
// between the parentheses.
std::vector<double> parse_args(const std::string& body, std::size_t expected,
                               const std::string& whole) {
  std::vector<double> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = body.find(',', start);
    const std::string piece = body.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(piece, &used);
    } catch (const std::exception&) {
      throw ValidationError("boundary data spec '" + whole +
                            "' has a malformed number '" + piece + "'");
    }
    while (used < piece.size() && std::isspace(static_cast<unsigned char>(piece[used]))) {
      ++used;
    }
    if (used != piece.size()) {
      throw ValidationError("boundary data spec '" + whole +
                            "' has a malformed number '" + piece + "'");
    }
    out.push_back(v);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.size() != expected) {
    std::ostringstream msg;
    msg << "boundary data spec '" << whole << "' expects " << expected
        << " argument(s), got " << out.size();
    throw ValidationError(msg.str());
  }
  return out;
}

}  // namespace

Phi phi_from_spec(const std::string& s) {
  std::string t = s;
  const auto notspace = [](unsigned char c) { return !std::isspace(c); };
  t.erase(t.begin(), std::find_if(t.begin(), t.end(), notspace));
  t.erase(std::find_if(t.rbegin(), t.rend(), notspace).base(), t.end());
  if (t == "X1") return phi_x1();
  if (t == "X2") return phi_x2();
  const std::size_t open = t.find('(');
  if (open != std::string::npos && !t.empty() && t.back() == ')') {
    const std::string head = t.substr(0, open);
    const std::string body = t.substr(open + 1, t.size() - open - 2);
    if (head == "CONSTANT") {
      return phi_constant(parse_args(body, 1, s)[0]);
    }
    if (head == "LINEAR") {
      const auto a = parse_args(body, 2, s);
      return phi_linear(a[0], a[1]);
    }
  }
  throw ValidationError("unrecognized boundary data spec '" + s +
                        "'; expected X1, X2, CONSTANT(c), or LINEAR(a1,a2)");
}

sparse::CsrMatrix p1_stiffness(const meshing::Mesh& mesh) {
  if (mesh.vertices.empty() || mesh.triangles.empty()) {
    throw ValidationError("mesh has no triangles to assemble");
  }
  const double h_min = mesh.params.sizing.h_min;
  const double area_floor = 1e-3 * h_min * h_min;

  std::vector<sparse::Triplet> k_entries;
  k_entries.reserve(9 * mesh.triangles.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const TriGeom g = tri_geometry(mesh, t);
    if (!(g.area > area_floor)) {
      const auto& tri = mesh.triangles[t];
      std::ostringstream msg;
      msg << "triangle " << t << " (vertices " << tri[0] << ", " << tri[1]
          << ", " << tri[2] << ") has area " << g.area
          << ", below the degeneracy floor " << area_floor;
      throw NumericalError(msg.str());
    }
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const double kij = g.area * (g.grad[i].x * g.grad[j].x +
                                     g.grad[i].y * g.grad[j].y);
        k_entries.push_back({mesh.triangles[t][i], mesh.triangles[t][j], kij});
      }
    }
  }
  return sparse::csr_from_triplets(mesh.vertices.size(), std::move(k_entries));
}

RobinSystem assemble(const meshing::Mesh& mesh, double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    std::ostringstream msg;
    msg << "gamma must be a positive real, got " << gamma;
    throw ValidationError(msg.str());
  }
  const std::size_t n = mesh.vertices.size();

  RobinSystem sys;
  sys.mesh = mesh;
  sys.gamma = gamma;
  sys.stiffness = p1_stiffness(mesh);

  // Boundary mass: exact edge-length quadrature of the P1 trace product,
  // local matrix (L/6) [[2, 1], [1, 2]] per boundary edge.
  std::array<std::vector<sparse::Triplet>, 2> m_entries;
  for (const auto& e : mesh.boundary) {
    if (e.marker == meshing::Marker::Outer) {
      sys.outer_vertices.push_back(e.a);
      sys.outer_vertices.push_back(e.b);
      continue;
    }
    const int j = e.marker == meshing::Marker::Inclusion1 ? 0 : 1;
    const geom::Vec2 pa = mesh.vertices[e.a];
    const geom::Vec2 pb = mesh.vertices[e.b];
    const double len = std::hypot(pb.x - pa.x, pb.y - pa.y);
    m_entries[j].push_back({e.a, e.a, len / 3.0});
    m_entries[j].push_back({e.b, e.b, len / 3.0});
    m_entries[j].push_back({e.a, e.b, len / 6.0});
    m_entries[j].push_back({e.b, e.a, len / 6.0});
    sys.inclusion_vertices[j].push_back(e.a);
    sys.inclusion_vertices[j].push_back(e.b);
  }
  sort_unique(sys.outer_vertices);
  for (int j = 0; j < 2; ++j) {
    sort_unique(sys.inclusion_vertices[j]);
    if (sys.inclusion_vertices[j].empty()) {
      std::ostringstream msg;
      msg << "mesh has no boundary edges for "
          << meshing::marker_name(j == 0 ? meshing::Marker::Inclusion1
                                         : meshing::Marker::Inclusion2);
      throw ValidationError(msg.str());
    }
    sys.boundary_mass[j] = sparse::csr_from_triplets(n, std::move(m_entries[j]));

    auto& w = sys.mean_vector[j];
    w.assign(n, 0.0);
    const auto& m = sys.boundary_mass[j];
    for (std::size_t r = 0; r < m.n; ++r) {
      for (std::int32_t k = m.rowptr[r]; k < m.rowptr[r + 1]; ++k) {
        w[r] += m.val[k];
      }
    }
    sys.boundary_length[j] = 0.0;
    for (const int v : sys.inclusion_vertices[j]) {
      sys.boundary_length[j] += w[v];
    }
  }
  if (sys.outer_vertices.empty()) {
    throw ValidationError("mesh has no container boundary edges");
  }
  return sys;
}

double energy(const std::vector<double>& values, const RobinSystem& sys) {
  const std::size_t n = sys.mesh.vertices.size();
  if (values.size() != n) {
    std::ostringstream msg;
    msg << "field has " << values.size() << " values but the mesh has " << n
        << " vertices";
    throw ValidationError(msg.str());
  }
  for (const double v : values) {
    if (!std::isfinite(v)) {
      throw ValidationError("field values must be finite");
    }
  }
  std::vector<double> tmp(n, 0.0);
  sys.stiffness.multiply(values.data(), tmp.data());
  double total = kernels::dot(values.data(), tmp.data(), n);
  for (int j = 0; j < 2; ++j) {
    sys.boundary_mass[j].multiply(values.data(), tmp.data());
    const double vmv = kernels::dot(values.data(), tmp.data(), n);
    const double wv =
        kernels::dot(sys.mean_vector[j].data(), values.data(), n);
    // Cauchy-Schwarz in the M_j inner product makes the bracket nonnegative;
    // clamp away the roundoff that can push a zero slightly negative.
    total += std::max(0.0, vmv - wv * wv / sys.boundary_length[j]) / sys.gamma;
  }
  return std::max(0.0, total);
}

FieldSolution solve(const RobinSystem& sys, const Phi& phi,
                    const SolverParams& params) {
  if (!(params.rtol > 0.0) || params.max_iterations <= 0) {
    throw ValidationError("solver tolerance and iteration cap must be positive");
  }
  if (params.force_direct && params.force_iterative) {
    throw ValidationError("cannot force both the direct and iterative paths");
  }

  const std::size_t n = sys.mesh.vertices.size();
  std::vector<double> u(n, 0.0);
  for (const int d : sys.outer_vertices) {
    u[d] = phi(sys.mesh.vertices[d]);
    if (!std::isfinite(u[d])) {
      std::ostringstream msg;
      msg << "boundary data is not finite at vertex " << d;
      throw ValidationError(msg.str());
    }
  }

  // Dirichlet elimination: renumber the non-outer vertices.
  std::vector<std::int32_t> free_of_full(n, -1);
  std::vector<int> full_of_free;
  {
    std::size_t d = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (d < sys.outer_vertices.size() &&
          sys.outer_vertices[d] == static_cast<int>(i)) {
        ++d;
        continue;
      }
      free_of_full[i] = static_cast<std::int32_t>(full_of_free.size());
      full_of_free.push_back(static_cast<int>(i));
    }
  }
  const std::size_t nf = full_of_free.size();
  if (nf == 0) {
    throw ValidationError("every vertex carries Dirichlet data; nothing to solve");
  }

  // Reduced sparse block K_ff + gamma^{-1} (M_1 + M_2)_ff and the load
  // b = -K_fd u_d. The boundary masses live away from the outer circle, so
  // they contribute nothing to the load.
  std::vector<sparse::Triplet> entries;
  std::vector<double> b(nf, 0.0);
  const auto fold_matrix = [&](const sparse::CsrMatrix& m, double scale) {
    for (std::size_t r = 0; r < m.n; ++r) {
      const std::int32_t fr = free_of_full[r];
      if (fr < 0) continue;
      for (std::int32_t k = m.rowptr[r]; k < m.rowptr[r + 1]; ++k) {
        const std::int32_t fc = free_of_full[m.col[k]];
        if (fc >= 0) {
          entries.push_back({fr, fc, scale * m.val[k]});
        } else {
          b[fr] -= scale * m.val[k] * u[m.col[k]];
        }
      }
    }
  };
  fold_matrix(sys.stiffness, 1.0);
  fold_matrix(sys.boundary_mass[0], 1.0 / sys.gamma);
  fold_matrix(sys.boundary_mass[1], 1.0 / sys.gamma);
  const sparse::CsrMatrix a_sparse = sparse::csr_from_triplets(nf, std::move(entries));

  std::array<std::vector<std::int32_t>, 2> w_idx;
  std::array<std::vector<double>, 2> w_val;
  std::array<double, 2> w_scale{};
  for (int j = 0; j < 2; ++j) {
    for (const int v : sys.inclusion_vertices[j]) {
      w_idx[j].push_back(free_of_full[v]);
      w_val[j].push_back(sys.mean_vector[j][v]);
    }
    w_scale[j] = 1.0 / (sys.gamma * sys.boundary_length[j]);
  }
  const ReducedOperator op(a_sparse, w_idx, w_val, w_scale);

  FieldSolution sol;
  std::vector<double> x(nf, 0.0);
  sol.direct = params.force_direct ||
               (!params.force_iterative && nf <= params.direct_limit);
  if (sol.direct) {
    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(nf, nf);
    for (std::size_t r = 0; r < a_sparse.n; ++r) {
      for (std::int32_t k = a_sparse.rowptr[r]; k < a_sparse.rowptr[r + 1];
           ++k) {
        dense(r, a_sparse.col[k]) = a_sparse.val[k];
      }
    }
    for (int j = 0; j < 2; ++j) {
      for (std::size_t p = 0; p < w_idx[j].size(); ++p) {
        for (std::size_t q = 0; q < w_idx[j].size(); ++q) {
          dense(w_idx[j][p], w_idx[j][q]) -=
              w_scale[j] * w_val[j][p] * w_val[j][q];
        }
      }
    }
    const Eigen::Map<const Eigen::VectorXd> rhs(b.data(), nf);
    const Eigen::LLT<Eigen::MatrixXd> llt(dense);
    if (llt.info() != Eigen::Success) {
      throw NumericalError(
          "dense factorization failed; the reduced operator is not positive "
          "definite");
    }
    Eigen::VectorXd sol_vec = llt.solve(rhs);
    std::copy(sol_vec.data(), sol_vec.data() + nf, x.begin());
    sol.iterations = 0;
  } else {
    const sparse::IncompleteCholesky precond(a_sparse);
    const sparse::PcgResult res =
        sparse::pcg(op, &precond, b.data(), x.data(), params.rtol,
                    params.max_iterations);
    if (!res.converged) {
      std::ostringstream msg;
      msg << "conjugate gradients did not reach rtol " << params.rtol
          << " within " << res.iterations
          << " sweeps (relative residual " << res.relative_residual
          << "); residual history tail:";
      const std::size_t tail = res.history.size() > 8 ? 8 : res.history.size();
      for (std::size_t k = res.history.size() - tail; k < res.history.size();
           ++k) {
        msg << ' ' << res.history[k];
      }
      throw NumericalError(msg.str());
    }
    sol.iterations = res.iterations;
  }

  // True residual of the reduced equations; its loop-indicator sums are the
  // variationally consistent conormal fluxes.
  std::vector<double> r(nf, 0.0);
  op.apply(x.data(), r.data());
  for (std::size_t i = 0; i < nf; ++i) r[i] -= b[i];
  const double bnorm = kernels::nrm2(b.data(), nf);
  const double rnorm = kernels::nrm2(r.data(), nf);
  sol.residual = bnorm > 0.0 ? rnorm / bnorm : rnorm;
  for (int j = 0; j < 2; ++j) {
    double flux = 0.0;
    for (const int v : sys.inclusion_vertices[j]) {
      flux += r[free_of_full[v]];
    }
    sol.flux[j] = flux;
  }

  for (std::size_t i = 0; i < nf; ++i) {
    u[full_of_free[i]] = x[i];
  }
  sol.u = std::move(u);

  for (int j = 0; j < 2; ++j) {
    sol.inclusion_potential[j] =
        kernels::dot(sys.mean_vector[j].data(), sol.u.data(), n) /
        sys.boundary_length[j];
  }

  sol.gradient.resize(sys.mesh.triangles.size());
  double grad_energy = 0.0;
  for (std::size_t t = 0; t < sys.mesh.triangles.size(); ++t) {
    const TriGeom g = tri_geometry(sys.mesh, t);
    geom::Vec2 grad{0.0, 0.0};
    for (int i = 0; i < 3; ++i) {
      const double ui = sol.u[sys.mesh.triangles[t][i]];
      grad.x += ui * g.grad[i].x;
      grad.y += ui * g.grad[i].y;
    }
    sol.gradient[t] = grad;
    grad_energy += g.area * (grad.x * grad.x + grad.y * grad.y);
  }
  sol.gradient_norm_l2 = std::sqrt(std::max(0.0, grad_energy));

  sol.energy = energy(sol.u, sys);

  double phi_min = phi(sys.mesh.vertices[sys.outer_vertices.front()]);
  double phi_max = phi_min;
  for (const int d : sys.outer_vertices) {
    const double v = phi(sys.mesh.vertices[d]);
    phi_min = std::min(phi_min, v);
    phi_max = std::max(phi_max, v);
  }
  const auto [umin_it, umax_it] =
      std::minmax_element(sol.u.begin(), sol.u.end());
  sol.max_principle_overshoot =
      std::max({0.0, *umax_it - phi_max, phi_min - *umin_it});
  return sol;
}

GradientExtremum max_gradient(const FieldSolution& sol, const RobinSystem& sys,
                              const geom::NeckWindow& window) {
  geom::validate(sys.mesh.geometry, window);
  if (sol.gradient.size() != sys.mesh.triangles.size()) {
    throw ValidationError(
        "solution gradients do not match the system's triangle count");
  }
  GradientExtremum best;
  bool found = false;
  for (std::size_t t = 0; t < sys.mesh.triangles.size(); ++t) {
    const auto& tri = sys.mesh.triangles[t];
    const geom::Vec2 c{(sys.mesh.vertices[tri[0]].x +
                        sys.mesh.vertices[tri[1]].x +
                        sys.mesh.vertices[tri[2]].x) / 3.0,
                       (sys.mesh.vertices[tri[0]].y +
                        sys.mesh.vertices[tri[1]].y +
                        sys.mesh.vertices[tri[2]].y) / 3.0};
    if (!geom::neck_membership(sys.mesh.geometry, window, c)) continue;
    const double m = std::hypot(sol.gradient[t].x, sol.gradient[t].y);
    if (!found || m > best.value) {
      best.value = m;
      best.location = c;
      found = true;
    }
  }
  if (!found) {
    std::ostringstream msg;
    msg << "neck window (center " << window.center << ", half-width "
        << window.half_width << ") contains no triangle centroid";
    throw ValidationError(msg.str());
  }
  return best;
}

void dump_solution(std::ostream& out, const FieldSolution& sol) {
  char buf[96];
  for (std::size_t i = 0; i < sol.u.size(); ++i) {
    std::snprintf(buf, sizeof buf, "u %zu %.17g\n", i, sol.u[i]);
    out << buf;
  }
  const auto kv = [&](const char* key, double v) {
    std::snprintf(buf, sizeof buf, "%s=%.17g\n", key, v);
    out << buf;
  };
  kv("U1", sol.inclusion_potential[0]);
  kv("U2", sol.inclusion_potential[1]);
  kv("flux1", sol.flux[0]);
  kv("flux2", sol.flux[1]);
  kv("energy", sol.energy);
  out << "iterations=" << sol.iterations << "\n";
  kv("residual", sol.residual);
}

}  // namespace neckfield::fem
