#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "image.hpp"

namespace pnp {

// A linear map R^cols -> R^rows together with its transpose.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;
  virtual std::size_t rows() const = 0;
  virtual std::size_t cols() const = 0;
  virtual void apply(std::span<const double> x, std::span<double> y) const = 0;
  virtual void apply_adjoint(std::span<const double> y, std::span<double> x) const = 0;

  Vector apply(std::span<const double> x) const {
    Vector y(rows());
    apply(x, y);
    return y;
  }
  Vector apply_adjoint(std::span<const double> y) const {
    Vector x(cols());
    apply_adjoint(y, x);
    return x;
  }
};

// Row-major dense matrix; used for small problems and as a test reference.
class DenseOperator final : public LinearOperator {
 public:
  DenseOperator(std::size_t rows, std::size_t cols, Vector values);
  static DenseOperator identity(std::size_t n);

  std::size_t rows() const override { return rows_; }
  std::size_t cols() const override { return cols_; }
  double operator()(std::size_t r, std::size_t c) const { return a_[r * cols_ + c]; }
  using LinearOperator::apply;
  using LinearOperator::apply_adjoint;
  void apply(std::span<const double> x, std::span<double> y) const override;
  void apply_adjoint(std::span<const double> y, std::span<double> x) const override;

 private:
  std::size_t rows_, cols_;
  Vector a_;
};

// Compressed sparse row storage with column indices sorted within each row.
struct CsrMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::uint32_t> col;
  std::vector<double> val;

  std::size_t nnz() const noexcept { return val.size(); }
  double row_dot(std::size_t r, std::span<const double> x) const {
    double s = 0.0;
    for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) s += val[k] * x[col[k]];
    return s;
  }
  void row_scatter(std::size_t r, double a, std::span<double> x) const {
    for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) x[col[k]] += a * val[k];
  }
};

class SparseOperator : public LinearOperator {
 public:
  explicit SparseOperator(CsrMatrix m);

  std::size_t rows() const override { return m_.rows; }
  std::size_t cols() const override { return m_.cols; }
  const CsrMatrix& matrix() const noexcept { return m_; }
  using LinearOperator::apply;
  using LinearOperator::apply_adjoint;
  void apply(std::span<const double> x, std::span<double> y) const override;
  void apply_adjoint(std::span<const double> y, std::span<double> x) const override;

 private:
  CsrMatrix m_;
};

// The operator restricted to a subset of its rows (A_I). Holds a reference to `full`.
class RowSubsetOperator final : public LinearOperator {
 public:
  RowSubsetOperator(const SparseOperator& full, std::vector<std::size_t> rows);

  std::size_t rows() const override { return rows_.size(); }
  std::size_t cols() const override { return full_.cols(); }
  const std::vector<std::size_t>& row_indices() const noexcept { return rows_; }
  using LinearOperator::apply;
  using LinearOperator::apply_adjoint;
  void apply(std::span<const double> x, std::span<double> y) const override;
  void apply_adjoint(std::span<const double> y, std::span<double> x) const override;

 private:
  const SparseOperator& full_;
  std::vector<std::size_t> rows_;
};

Vector gather(std::span<const double> v, const std::vector<std::size_t>& idx);

// Worker count for row-parallel products; PNPCT_THREADS overrides, default 1.
std::size_t operator_threads();
// Overrides PNPCT_THREADS for the whole process; 0 restores the environment value.
void set_operator_threads(std::size_t n);

}  // namespace pnp
