#include "neckfield/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "neckfield/errors.hpp"
#include "neckfield/kernels.hpp"

namespace neckfield::sparse {

void CsrMatrix::multiply(const double* x, double* y) const {
  kernels::csr_spmv(rowptr.data(), col.data(), val.data(), n, x, y);
}

CsrMatrix csr_from_triplets(std::size_t n, std::vector<Triplet> entries) {
  for (const auto& t : entries)
    if (t.row < 0 || t.col < 0 || static_cast<std::size_t>(t.row) >= n ||
        static_cast<std::size_t>(t.col) >= n)
      throw ValidationError("triplet index out of range");
  std::sort(entries.begin(), entries.end(),
            [](const Triplet& a, const Triplet& b) {
              return a.row != b.row ? a.row < b.row : a.col < b.col;
            });
  CsrMatrix m;
  m.n = n;
  m.rowptr.assign(n + 1, 0);
  for (std::size_t i = 0; i < entries.size();) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < entries.size() && entries[j].row == entries[i].row &&
           entries[j].col == entries[i].col)
      sum += entries[j++].value;
    m.col.push_back(entries[i].col);
    m.val.push_back(sum);
    ++m.rowptr[entries[i].row + 1];
    i = j;
  }
  for (std::size_t r = 0; r < n; ++r) m.rowptr[r + 1] += m.rowptr[r];
  return m;
}

IncompleteCholesky::IncompleteCholesky(const CsrMatrix& a) {
  if (a.rowptr.size() != a.n + 1)
    throw ValidationError("malformed CSR matrix");
  n_ = a.n;
  // Escalating diagonal scaling: 0, then 1e-3 growing tenfold.
  if (try_factor(a, 0.0)) return;
  for (double shift = 1e-3; shift <= 1e3; shift *= 10.0) {
    if (try_factor(a, shift)) {
      shift_ = shift;
      return;
    }
  }
  throw NumericalError(
      "incomplete Cholesky lost positivity even with diagonal scaling");
}

bool IncompleteCholesky::try_factor(const CsrMatrix& a, double shift) {
  rowptr_.assign(1, 0);
  col_.clear();
  val_.clear();
  diag_.assign(n_, 0.0);

  // Strictly-lower pattern of A, row-wise; values start as A's entries.
  std::vector<double> adiag(n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    for (auto k = a.rowptr[i]; k < a.rowptr[i + 1]; ++k) {
      const std::int32_t j = a.col[k];
      if (static_cast<std::size_t>(j) < i) {
        col_.push_back(j);
        val_.push_back(a.val[k]);
      } else if (static_cast<std::size_t>(j) == i) {
        adiag[i] = a.val[k] * (1.0 + shift);
      }
    }
    rowptr_.push_back(static_cast<std::int32_t>(col_.size()));
  }

  // Row-oriented up-looking factorization on the fixed pattern. The scatter
  // array holds the current row's partial values indexed by column.
  std::vector<double> scatter(n_, 0.0);
  std::vector<std::int32_t> touched;
  for (std::size_t i = 0; i < n_; ++i) {
    touched.clear();
    for (auto k = rowptr_[i]; k < rowptr_[i + 1]; ++k) {
      scatter[col_[k]] = val_[k];
      touched.push_back(col_[k]);
    }
    double dsum = adiag[i];
    for (auto k = rowptr_[i]; k < rowptr_[i + 1]; ++k) {
      const std::int32_t j = col_[k];
      // L(i,j) = (A(i,j) - sum_{t<j} L(i,t) L(j,t)) / L(j,j)
      double s = scatter[j];
      for (auto t = rowptr_[j]; t < rowptr_[j + 1]; ++t)
        s -= scatter[col_[t]] * val_[t];
      const double lij = s / diag_[j];
      val_[k] = lij;
      scatter[j] = lij;
      dsum -= lij * lij;
    }
    if (!(dsum > 0.0)) {
      for (auto j : touched) scatter[j] = 0.0;
      return false;
    }
    diag_[i] = std::sqrt(dsum);
    for (auto j : touched) scatter[j] = 0.0;
  }
  return true;
}

void IncompleteCholesky::solve(const double* r, double* z) const {
  // Forward: L y = r, with unit access pattern over the strict lower rows.
  for (std::size_t i = 0; i < n_; ++i) {
    double s = r[i];
    for (auto k = rowptr_[i]; k < rowptr_[i + 1]; ++k)
      s -= val_[k] * z[col_[k]];
    z[i] = s / diag_[i];
  }
  // Backward: L^T z = y.
  for (std::size_t i = n_; i-- > 0;) {
    const double zi = z[i] / diag_[i];
    z[i] = zi;
    for (auto k = rowptr_[i]; k < rowptr_[i + 1]; ++k)
      z[col_[k]] -= val_[k] * zi;
  }
}

PcgResult pcg(const LinearOperator& a, const Preconditioner* m,
              const double* b, double* x, double rtol, int max_iterations) {
  const std::size_t n = a.size();
  PcgResult out;
  std::vector<double> r(n), z(n), p(n), q(n);

  const double bnorm = kernels::nrm2(b, n);
  if (bnorm == 0.0) {
    std::fill(x, x + n, 0.0);
    out.converged = true;
    return out;
  }

  auto true_residual = [&]() {
    a.apply(x, q.data());
    for (std::size_t i = 0; i < n; ++i) q[i] = b[i] - q[i];
    return kernels::nrm2(q.data(), n) / bnorm;
  };

  a.apply(x, q.data());
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];

  auto precondition = [&]() {
    if (m)
      m->solve(r.data(), z.data());
    else
      std::copy(r.begin(), r.end(), z.begin());
  };
  precondition();
  std::copy(z.begin(), z.end(), p.begin());
  double rz = kernels::dot(r.data(), z.data(), n);

  for (int it = 0; it < max_iterations; ++it) {
    a.apply(p.data(), q.data());
    const double pq = kernels::dot(p.data(), q.data(), n);
    if (!(pq > 0.0)) {
      std::ostringstream os;
      os << "conjugate gradients met a nonpositive curvature direction "
            "(p'Ap = "
         << pq << " at sweep " << it << ")";
      throw NumericalError(os.str());
    }
    const double alpha = rz / pq;
    kernels::axpy(alpha, p.data(), x, n);
    kernels::axpy(-alpha, q.data(), r.data(), n);
    out.iterations = it + 1;
    const double rn = kernels::nrm2(r.data(), n) / bnorm;
    out.history.push_back(rn);
    if (rn <= rtol) {
      // Recurrence drift check: accept only on the recomputed residual.
      out.relative_residual = true_residual();
      if (out.relative_residual <= rtol) {
        out.converged = true;
        return out;
      }
      // Drifted: restart the recurrence from the true residual.
      a.apply(x, q.data());
      for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
      precondition();
      std::copy(z.begin(), z.end(), p.begin());
      rz = kernels::dot(r.data(), z.data(), n);
      continue;
    }
    precondition();
    const double rz_next = kernels::dot(r.data(), z.data(), n);
    const double beta = rz_next / rz;
    rz = rz_next;
    kernels::xpby(z.data(), beta, p.data(), n);
  }
  out.relative_residual = true_residual();
  out.converged = out.relative_residual <= rtol;
  return out;
}

}  // namespace neckfield::sparse
