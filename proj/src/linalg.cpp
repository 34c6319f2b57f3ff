#include "mch/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

extern "C" {
#include <umfpack.h>
}

namespace mch {

SparseMatrix::SparseMatrix(int rows, int cols, std::vector<int> row_ptr, std::vector<int> col_idx,
                           std::vector<double> values)
    : rows_(rows), cols_(cols), row_ptr_(std::move(row_ptr)), col_idx_(std::move(col_idx)), values_(std::move(values)) {
  if (static_cast<int>(row_ptr_.size()) != rows_ + 1 || col_idx_.size() != values_.size() ||
      row_ptr_.back() != static_cast<int>(values_.size())) {
    throw std::invalid_argument("SparseMatrix: inconsistent compressed-row arrays");
  }
}

double SparseMatrix::coeff(int r, int c) const {
  const auto begin = col_idx_.begin() + row_ptr_[r];
  const auto end = col_idx_.begin() + row_ptr_[r + 1];
  const auto it = std::lower_bound(begin, end, c);
  if (it != end && *it == c) {
    return values_[static_cast<std::size_t>(it - col_idx_.begin())];
  }
  return 0.0;
}

std::vector<double> SparseMatrix::multiply(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != cols_) {
    throw std::invalid_argument("SparseMatrix::multiply: dimension mismatch");
  }
  std::vector<double> y(rows_, 0.0);
  for (int r = 0; r < rows_; ++r) {
    double s = 0.0;
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      s += values_[k] * x[col_idx_[k]];
    }
    y[r] = s;
  }
  return y;
}

double SparseMatrix::frobenius_norm() const {
  double s = 0.0;
  for (double v : values_) {
    s += v * v;
  }
  return std::sqrt(s);
}

SparseMatrix SparseMatrix::transpose() const {
  std::vector<int> ptr(cols_ + 1, 0);
  for (int c : col_idx_) {
    ++ptr[c + 1];
  }
  for (int c = 0; c < cols_; ++c) {
    ptr[c + 1] += ptr[c];
  }
  std::vector<int> idx(col_idx_.size());
  std::vector<double> val(values_.size());
  std::vector<int> next(ptr.begin(), ptr.end() - 1);
  for (int r = 0; r < rows_; ++r) {
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      const int dst = next[col_idx_[k]]++;
      idx[dst] = r;
      val[dst] = values_[k];
    }
  }
  return {cols_, rows_, std::move(ptr), std::move(idx), std::move(val)};
}

double SparseMatrix::asymmetry() const {
  double worst = 0.0;
  for (int r = 0; r < rows_; ++r) {
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      worst = std::max(worst, std::abs(values_[k] - coeff(col_idx_[k], r)));
    }
  }
  return worst;
}

std::vector<Triplet> SparseMatrix::triplets() const {
  std::vector<Triplet> out;
  out.reserve(values_.size());
  for (int r = 0; r < rows_; ++r) {
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      out.push_back({r, col_idx_[k], values_[k]});
    }
  }
  return out;
}

SparseMatrix assemble_from_triplets(int rows, int cols, std::vector<Triplet> triplets) {
  for (const auto& t : triplets) {
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols) {
      throw std::out_of_range("assemble_from_triplets: entry (" + std::to_string(t.row) + ", " +
                              std::to_string(t.col) + ") outside " + std::to_string(rows) + "x" +
                              std::to_string(cols));
    }
  }
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return std::tie(a.row, a.col, a.value) < std::tie(b.row, b.col, b.value);
  });
  std::vector<int> ptr(rows + 1, 0);
  std::vector<int> idx;
  std::vector<double> val;
  idx.reserve(triplets.size());
  val.reserve(triplets.size());
  for (std::size_t k = 0; k < triplets.size();) {
    const int r = triplets[k].row;
    const int c = triplets[k].col;
    double s = 0.0;
    for (; k < triplets.size() && triplets[k].row == r && triplets[k].col == c; ++k) {
      s += triplets[k].value;
    }
    idx.push_back(c);
    val.push_back(s);
    ++ptr[r + 1];
  }
  for (int r = 0; r < rows; ++r) {
    ptr[r + 1] += ptr[r];
  }
  return {rows, cols, std::move(ptr), std::move(idx), std::move(val)};
}

SparseMatrix linear_combination(double a, const SparseMatrix& A, double b, const SparseMatrix& B) {
  if (A.rows() != B.rows() || A.cols() != B.cols()) {
    throw std::invalid_argument("linear_combination: dimension mismatch");
  }
  std::vector<int> ptr(A.rows() + 1, 0);
  std::vector<int> idx;
  std::vector<double> val;
  idx.reserve(static_cast<std::size_t>(std::max(A.nnz(), B.nnz())));
  val.reserve(idx.capacity());
  const auto ap = A.row_ptr();
  const auto ai = A.col_idx();
  const auto av = A.values();
  const auto bp = B.row_ptr();
  const auto bi = B.col_idx();
  const auto bv = B.values();
  for (int r = 0; r < A.rows(); ++r) {
    int ka = ap[r];
    int kb = bp[r];
    while (ka < ap[r + 1] || kb < bp[r + 1]) {
      const int ca = ka < ap[r + 1] ? ai[ka] : A.cols();
      const int cb = kb < bp[r + 1] ? bi[kb] : B.cols();
      if (ca == cb) {
        idx.push_back(ca);
        val.push_back(a * av[ka++] + b * bv[kb++]);
      } else if (ca < cb) {
        idx.push_back(ca);
        val.push_back(a * av[ka++]);
      } else {
        idx.push_back(cb);
        val.push_back(b * bv[kb++]);
      }
    }
    ptr[r + 1] = static_cast<int>(idx.size());
  }
  return {A.rows(), A.cols(), std::move(ptr), std::move(idx), std::move(val)};
}

double norm2(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) {
    s += v * v;
  }
  return std::sqrt(s);
}

struct LuFactorization::Impl {
  std::vector<int> col_ptr;
  std::vector<int> row_idx;
  std::vector<double> values;
  SparseMatrix a;
  void* numeric = nullptr;
  double control[UMFPACK_CONTROL]{};

  ~Impl() {
    if (numeric != nullptr) {
      umfpack_di_free_numeric(&numeric);
    }
  }
};

LuFactorization::LuFactorization(const SparseMatrix& a) : impl_(std::make_unique<Impl>()), n_(a.rows()) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("LuFactorization: matrix is " + std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + ", not square");
  }
  // UMFPACK expects compressed columns: the CSR arrays of Aᵀ.
  const SparseMatrix at = a.transpose();
  impl_->col_ptr.assign(at.row_ptr().begin(), at.row_ptr().end());
  impl_->row_idx.assign(at.col_idx().begin(), at.col_idx().end());
  impl_->values.assign(at.values().begin(), at.values().end());
  impl_->a = a;

  umfpack_di_defaults(impl_->control);
  double info[UMFPACK_INFO];
  void* symbolic = nullptr;
  int status = umfpack_di_symbolic(n_, n_, impl_->col_ptr.data(), impl_->row_idx.data(), impl_->values.data(),
                                   &symbolic, impl_->control, info);
  if (status != UMFPACK_OK) {
    throw std::runtime_error("LuFactorization: symbolic analysis failed with UMFPACK status " +
                             std::to_string(status));
  }
  status = umfpack_di_numeric(impl_->col_ptr.data(), impl_->row_idx.data(), impl_->values.data(), symbolic,
                              &impl_->numeric, impl_->control, info);
  umfpack_di_free_symbolic(&symbolic);
  if (status == UMFPACK_WARNING_singular_matrix) {
    std::vector<double> diag(n_);
    std::vector<int> q(n_);
    int do_recip = 0;
    umfpack_di_get_numeric(nullptr, nullptr, nullptr, nullptr, nullptr, nullptr, nullptr, q.data(), diag.data(),
                           &do_recip, nullptr, impl_->numeric);
    int pivot = -1;
    for (int k = 0; k < n_; ++k) {
      if (diag[k] == 0.0) {
        pivot = q[k];
        break;
      }
    }
    throw SingularMatrixError("LuFactorization: matrix of order " + std::to_string(n_) +
                                  " is singular; zero pivot at column " + std::to_string(pivot),
                              pivot);
  }
  if (status != UMFPACK_OK) {
    throw std::runtime_error("LuFactorization: numeric factorization failed with UMFPACK status " +
                             std::to_string(status));
  }
  rcond_ = info[UMFPACK_RCOND];
}

LuFactorization::~LuFactorization() = default;
LuFactorization::LuFactorization(LuFactorization&&) noexcept = default;
LuFactorization& LuFactorization::operator=(LuFactorization&&) noexcept = default;

LinearSolution LuFactorization::solve(std::span<const double> b) const {
  if (static_cast<int>(b.size()) != n_) {
    throw std::invalid_argument("LuFactorization::solve: right-hand side has length " + std::to_string(b.size()) +
                                ", expected " + std::to_string(n_));
  }
  LinearSolution out;
  out.x.assign(n_, 0.0);
  out.rcond_estimate = rcond_;
  if (n_ == 0) {
    return out;
  }
  double info[UMFPACK_INFO];
  const int status = umfpack_di_solve(UMFPACK_A, impl_->col_ptr.data(), impl_->row_idx.data(), impl_->values.data(),
                                      out.x.data(), b.data(), impl_->numeric, impl_->control, info);
  if (status != UMFPACK_OK) {
    throw std::runtime_error("LuFactorization::solve: UMFPACK status " + std::to_string(status));
  }
  auto r = impl_->a.multiply(out.x);
  for (int k = 0; k < n_; ++k) {
    r[k] -= b[k];
  }
  out.residual_norm = norm2(r);
  if (!std::isfinite(out.residual_norm)) {
    throw std::runtime_error("LuFactorization::solve: non-finite solution");
  }
  return out;
}

LinearSolution solve_direct(const SparseMatrix& a, std::span<const double> b) {
  return LuFactorization(a).solve(b);
}

}  // namespace mch
