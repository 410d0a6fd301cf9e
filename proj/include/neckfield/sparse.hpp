#pragma once

#include <cstdint>
#include <vector>

// Symmetric sparse linear algebra for the Robin solver: CSR storage, an
// incomplete Cholesky preconditioner on the sparse part of the operator, and
// preconditioned conjugate gradients over an abstract operator so rank-one
// boundary couplings can stay matrix-free.

namespace neckfield::sparse {

struct Triplet {
  std::int32_t row = 0;
  std::int32_t col = 0;
  double value = 0.0;
};

struct CsrMatrix {
  std::size_t n = 0;  // square
  std::vector<std::int32_t> rowptr;
  std::vector<std::int32_t> col;
  std::vector<double> val;

  // y = A x
  void multiply(const double* x, double* y) const;
};

// Sums duplicates, sorts columns within rows. Indices must lie in [0, n).
CsrMatrix csr_from_triplets(std::size_t n, std::vector<Triplet> entries);

class LinearOperator {
 public:
  virtual ~LinearOperator() = default;
  virtual std::size_t size() const = 0;
  virtual void apply(const double* x, double* y) const = 0;
};

class Preconditioner {
 public:
  virtual ~Preconditioner() = default;
  // z = M^{-1} r
  virtual void solve(const double* r, double* z) const = 0;
};

// Zero-fill incomplete Cholesky of a symmetric positive definite CSR matrix.
// When a pivot loses positivity the factorization restarts with the diagonal
// scaled up (shift escalation); shift_used reports the final scaling.
class IncompleteCholesky : public Preconditioner {
 public:
  explicit IncompleteCholesky(const CsrMatrix& a);
  void solve(const double* r, double* z) const override;
  double shift_used() const { return shift_; }

 private:
  // Lower factor stored row-wise; diagonal kept separately for the solves.
  std::size_t n_ = 0;
  std::vector<std::int32_t> rowptr_, col_;
  std::vector<double> val_;
  std::vector<double> diag_;
  double shift_ = 0.0;

  bool try_factor(const CsrMatrix& a, double shift);
};

struct PcgResult {
  bool converged = false;
  int iterations = 0;
  double relative_residual = 0.0;  // true residual over ||b||
  std::vector<double> history;     // preconditioned-norm residual per sweep
};

// Solves A x = b with initial guess x. Convergence is declared only after
// the unpreconditioned true residual ||b - A x|| passes rtol * ||b||.
PcgResult pcg(const LinearOperator& a, const Preconditioner* m,
              const double* b, double* x, double rtol, int max_iterations);

}  // namespace neckfield::sparse
