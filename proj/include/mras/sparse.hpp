#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mras {

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Compressed sparse row matrix with strictly increasing column indices per row.
class CsrMatrix {
 public:
  CsrMatrix() = default;
  CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_offsets,
            std::vector<std::size_t> column_indices, std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }

  std::span<const std::size_t> row_offsets() const { return row_offsets_; }
  std::span<const std::size_t> column_indices() const { return column_indices_; }
  std::span<const double> values() const { return values_; }

  /// Stored value at (i, j), zero when not in the pattern.
  double at(std::size_t i, std::size_t j) const;
  std::vector<double> diagonal() const;

  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> multiply(std::span<const double> x) const;
  /// y = A^T x
  std::vector<double> multiply_transpose(std::span<const double> x) const;

  CsrMatrix transpose() const;
  bool is_symmetric(double rel_tol = 1e-13) const;
  double max_abs() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<std::size_t> column_indices_;
  std::vector<double> values_;
};

/// Assembly-style construction: duplicate (i, j) entries are summed.
CsrMatrix csr_from_triplets(std::size_t rows, std::size_t cols, std::span<const Triplet> triplets);

std::vector<double> spmv(const CsrMatrix& a, std::span<const double> x);

/// alpha*A + beta*B over the union of both patterns.
CsrMatrix add(double alpha, const CsrMatrix& a, double beta, const CsrMatrix& b);

enum class Preconditioner { none, jacobi };

struct SolveOptions {
  double tol = 1e-10;
  std::size_t max_iter = 0;  // 0 selects 10 * n
  Preconditioner preconditioner = Preconditioner::jacobi;
  bool record_history = false;
};

struct SolveReport {
  std::size_t iterations = 0;
  /// Relative residual ||P r|| / ||P b|| with P the preconditioner (identity for none).
  double final_residual_norm = 0.0;
  bool converged = false;
  /// Filled when SolveOptions::record_history is set. residual_history holds the
  /// relative residual per iteration; energy_history holds 0.5 x'Ax - b'x.
  std::vector<double> residual_history;
  std::vector<double> energy_history;
};

struct SolveResult {
  std::vector<double> x;
  SolveReport report;
};

/// Preconditioned conjugate gradients for SPD systems. Throws InputError on
/// dimension mismatch or a zero diagonal entry under Jacobi preconditioning.
/// Non-convergence is reported, not thrown.
SolveResult cg_solve(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                     const SolveOptions& options = {});

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

}  // namespace mras
