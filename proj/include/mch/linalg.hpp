#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mch {

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

/// Compressed-row sparse matrix with sorted, duplicate-free column indices.
/// Explicit zeros are kept.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(int rows, int cols, std::vector<int> row_ptr, std::vector<int> col_idx, std::vector<double> values);

  [[nodiscard]] int rows() const { return rows_; }
  [[nodiscard]] int cols() const { return cols_; }
  [[nodiscard]] int nnz() const { return static_cast<int>(values_.size()); }
  [[nodiscard]] std::span<const int> row_ptr() const { return row_ptr_; }
  [[nodiscard]] std::span<const int> col_idx() const { return col_idx_; }
  [[nodiscard]] std::span<const double> values() const { return values_; }
  [[nodiscard]] std::span<double> values() { return values_; }

  /// Entry (r, c); zero when not stored.
  [[nodiscard]] double coeff(int r, int c) const;
  [[nodiscard]] std::vector<double> multiply(std::span<const double> x) const;
  [[nodiscard]] double frobenius_norm() const;
  [[nodiscard]] SparseMatrix transpose() const;
  /// Largest |A(i,j) - A(j,i)|.
  [[nodiscard]] double asymmetry() const;
  [[nodiscard]] std::vector<Triplet> triplets() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<int> row_ptr_{0};
  std::vector<int> col_idx_;
  std::vector<double> values_;
};

/// Sums duplicates. Entries are sorted by (row, col, value) before summation,
/// so the result does not depend on the order of the input triplets.
SparseMatrix assemble_from_triplets(int rows, int cols, std::vector<Triplet> triplets);

/// a·A + b·B over the union of both sparsity patterns.
SparseMatrix linear_combination(double a, const SparseMatrix& A, double b, const SparseMatrix& B);

class SingularMatrixError : public std::runtime_error {
 public:
  SingularMatrixError(const std::string& what, int pivot) : std::runtime_error(what), pivot_(pivot) {}
  /// Column of the original matrix at which elimination met a zero pivot.
  [[nodiscard]] int pivot_index() const { return pivot_; }

 private:
  int pivot_;
};

struct LinearSolution {
  std::vector<double> x;
  double residual_norm = 0.0;   // ‖Ax − b‖₂, recomputed after the solve
  double rcond_estimate = 0.0;  // min |u_kk| / max |u_kk| of the LU factors
};

/// Sparse LU with fill-reducing column ordering and threshold partial
/// pivoting (UMFPACK). The numeric factors are immutable after construction,
/// so concurrent solve() calls on one factorization are safe.
class LuFactorization {
 public:
  explicit LuFactorization(const SparseMatrix& a);
  ~LuFactorization();
  LuFactorization(LuFactorization&&) noexcept;
  LuFactorization& operator=(LuFactorization&&) noexcept;
  LuFactorization(const LuFactorization&) = delete;
  LuFactorization& operator=(const LuFactorization&) = delete;

  [[nodiscard]] LinearSolution solve(std::span<const double> b) const;
  [[nodiscard]] int size() const { return n_; }
  [[nodiscard]] double rcond_estimate() const { return rcond_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int n_ = 0;
  double rcond_ = 0.0;
};

LinearSolution solve_direct(const SparseMatrix& a, std::span<const double> b);

double norm2(std::span<const double> x);

}  // namespace mch
