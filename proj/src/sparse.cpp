#include "mras/sparse.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "mras/error.hpp"

namespace mras {

CsrMatrix::CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_offsets,
                     std::vector<std::size_t> column_indices, std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      row_offsets_(std::move(row_offsets)),
      column_indices_(std::move(column_indices)),
      values_(std::move(values)) {
  if (row_offsets_.size() != rows_ + 1 || row_offsets_.front() != 0 ||
      row_offsets_.back() != values_.size() || column_indices_.size() != values_.size())
    throw InputError("CsrMatrix: inconsistent storage arrays");
  for (std::size_t i = 0; i < rows_; ++i) {
    if (row_offsets_[i] > row_offsets_[i + 1]) throw InputError("CsrMatrix: decreasing offsets");
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      if (column_indices_[k] >= cols_) throw InputError("CsrMatrix: column out of range");
      if (k > row_offsets_[i] && column_indices_[k] <= column_indices_[k - 1])
        throw InputError("CsrMatrix: column indices not strictly increasing");
      if (std::isnan(values_[k])) throw InputError("CsrMatrix: NaN entry");
    }
  }
}

double CsrMatrix::at(std::size_t i, std::size_t j) const {
  const auto first = column_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i]);
  const auto last = column_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i + 1]);
  const auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return 0.0;
  return values_[static_cast<std::size_t>(it - column_indices_.begin())];
}

std::vector<double> CsrMatrix::diagonal() const {
  std::vector<double> d(std::min(rows_, cols_), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = at(i, i);
  return d;
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != cols_ || y.size() != rows_) throw InputError("spmv: dimension mismatch");
  for (std::size_t i = 0; i < rows_; ++i) {
    double sum = 0.0;
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
      sum += values_[k] * x[column_indices_[k]];
    y[i] = sum;
  }
}

std::vector<double> CsrMatrix::multiply(std::span<const double> x) const {
  std::vector<double> y(rows_);
  multiply(x, y);
  return y;
}

std::vector<double> CsrMatrix::multiply_transpose(std::span<const double> x) const {
  if (x.size() != rows_) throw InputError("spmv: dimension mismatch");
  std::vector<double> y(cols_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
      y[column_indices_[k]] += values_[k] * x[i];
  }
  return y;
}

CsrMatrix CsrMatrix::transpose() const {
  std::vector<Triplet> t;
  t.reserve(nnz());
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
      t.push_back({column_indices_[k], i, values_[k]});
  }
  return csr_from_triplets(cols_, rows_, t);
}

double CsrMatrix::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

bool CsrMatrix::is_symmetric(double rel_tol) const {
  if (rows_ != cols_) return false;
  const double scale = std::max(max_abs(), 1e-300);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      if (std::abs(values_[k] - at(column_indices_[k], i)) > rel_tol * scale) return false;
    }
  }
  return true;
}

CsrMatrix csr_from_triplets(std::size_t rows, std::size_t cols,
                            std::span<const Triplet> triplets) {
  std::vector<std::size_t> counts(rows + 1, 0);
  for (const auto& t : triplets) {
    if (t.row >= rows || t.col >= cols)
      throw InputError("csr_from_triplets: index (" + std::to_string(t.row) + ", " +
                       std::to_string(t.col) + ") out of range");
    ++counts[t.row + 1];
  }
  std::partial_sum(counts.begin(), counts.end(), counts.begin());

  // Bucket by row in input order, then sort each row by column and merge.
  std::vector<std::pair<std::size_t, double>> bucket(triplets.size());
  std::vector<std::size_t> fill(counts.begin(), counts.end() - 1);
  for (const auto& t : triplets) bucket[fill[t.row]++] = {t.col, t.value};

  std::vector<std::size_t> offsets(rows + 1, 0);
  std::vector<std::size_t> columns;
  std::vector<double> values;
  columns.reserve(triplets.size());
  values.reserve(triplets.size());
  for (std::size_t i = 0; i < rows; ++i) {
    auto first = bucket.begin() + static_cast<std::ptrdiff_t>(counts[i]);
    auto last = bucket.begin() + static_cast<std::ptrdiff_t>(counts[i + 1]);
    std::stable_sort(first, last, [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto it = first; it != last; ++it) {
      if (columns.size() > offsets[i] && columns.back() == it->first) {
        values.back() += it->second;
      } else {
        columns.push_back(it->first);
        values.push_back(it->second);
      }
    }
    offsets[i + 1] = columns.size();
  }
  return CsrMatrix(rows, cols, std::move(offsets), std::move(columns), std::move(values));
}

std::vector<double> spmv(const CsrMatrix& a, std::span<const double> x) { return a.multiply(x); }

CsrMatrix add(double alpha, const CsrMatrix& a, double beta, const CsrMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InputError("add: dimension mismatch");
  std::vector<std::size_t> offsets(a.rows() + 1, 0);
  std::vector<std::size_t> columns;
  std::vector<double> values;
  columns.reserve(std::max(a.nnz(), b.nnz()));
  values.reserve(std::max(a.nnz(), b.nnz()));
  const auto ao = a.row_offsets(), bo = b.row_offsets();
  const auto ac = a.column_indices(), bc = b.column_indices();
  const auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    std::size_t p = ao[i], q = bo[i];
    while (p < ao[i + 1] || q < bo[i + 1]) {
      if (q == bo[i + 1] || (p < ao[i + 1] && ac[p] < bc[q])) {
        columns.push_back(ac[p]);
        values.push_back(alpha * av[p++]);
      } else if (p == ao[i + 1] || bc[q] < ac[p]) {
        columns.push_back(bc[q]);
        values.push_back(beta * bv[q++]);
      } else {
        columns.push_back(ac[p]);
        values.push_back(alpha * av[p++] + beta * bv[q++]);
      }
    }
    offsets[i + 1] = columns.size();
  }
  return CsrMatrix(a.rows(), a.cols(), std::move(offsets), std::move(columns), std::move(values));
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

SolveResult cg_solve(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                     const SolveOptions& options) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.size() != n || x0.size() != n)
    throw InputError("cg_solve: dimension mismatch");
  if (!(options.tol > 0.0)) throw InputError("cg_solve: tol must be positive");
  assert(a.is_symmetric(1e-10) && "cg_solve requires a symmetric matrix");

  std::vector<double> inv_diag(n, 1.0);
  if (options.preconditioner == Preconditioner::jacobi) {
    const auto d = a.diagonal();
    for (std::size_t i = 0; i < n; ++i) {
      if (d[i] == 0.0)
        throw InputError("cg_solve: zero diagonal entry at row " + std::to_string(i));
      inv_diag[i] = 1.0 / d[i];
    }
  }
  const auto precondition = [&](std::span<const double> r, std::span<double> z) {
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
  };

  SolveResult result;
  auto& x = result.x;
  auto& report = result.report;
  x.assign(x0.begin(), x0.end());
  if (n == 0) {
    report.converged = true;
    return result;
  }

  std::vector<double> r(n), z(n), p(n), ap(n);
  a.multiply(x, ap);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];

  std::vector<double> pb(n);
  precondition(b, pb);
  const double b_norm = norm2(pb);
  if (b_norm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    report.converged = true;
    return result;
  }

  const auto energy = [&] {
    // 0.5 x'Ax - b'x = -0.5 x'(b + r) since Ax = b - r
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * (b[i] + r[i]);
    return -0.5 * s;
  };

  precondition(r, z);
  double rel = norm2(z) / b_norm;
  if (options.record_history) {
    report.residual_history.push_back(rel);
    report.energy_history.push_back(energy());
  }
  const std::size_t max_iter = options.max_iter ? options.max_iter : 10 * n;
  p = z;
  double rz = dot(r, z);

  std::size_t it = 0;
  while (rel > options.tol && it < max_iter) {
    a.multiply(p, ap);
    const double pap = dot(p, ap);
    if (!(pap > 0.0)) break;  // breakdown: not SPD along p
    const double alpha = rz / pap;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    precondition(r, z);
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    ++it;
    rel = norm2(z) / b_norm;
    if (options.record_history) {
      report.residual_history.push_back(rel);
      report.energy_history.push_back(energy());
    }
  }
  report.iterations = it;
  report.final_residual_norm = rel;
  report.converged = rel <= options.tol;
  return result;
}

}  // namespace mras
