#include "linear_operator.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>

#include "error.hpp"

namespace pnp {

namespace {

void check_shape(const LinearOperator& op, std::size_t in, std::size_t out, bool adjoint) {
  const std::size_t want_in = adjoint ? op.rows() : op.cols();
  const std::size_t want_out = adjoint ? op.cols() : op.rows();
  require(in == want_in && out == want_out, ErrorCode::ShapeMismatch,
          std::string(adjoint ? "adjoint" : "apply") + ": expected " + std::to_string(want_in) +
              " -> " + std::to_string(want_out) + ", got " + std::to_string(in) + " -> " +
              std::to_string(out));
}

// Each row is owned by one worker, so the result does not depend on the thread count.
template <class F>
void for_rows(std::size_t n, F&& body) {
  const std::size_t workers = std::min(operator_threads(), std::max<std::size_t>(n / 256, 1));
  if (workers <= 1) {
    for (std::size_t r = 0; r < n; ++r) body(r);
    return;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
    pool.emplace_back([lo, hi, &body] {
      for (std::size_t r = lo; r < hi; ++r) body(r);
    });
  }
}

}  // namespace

namespace {
std::atomic<std::size_t> g_thread_override{0};
}

std::size_t operator_threads() {
  if (const std::size_t o = g_thread_override.load()) return o;
  static const std::size_t n = [] {
    if (const char* env = std::getenv("PNPCT_THREADS")) {
      try {
        long v = std::stol(env);
        if (v >= 1) return static_cast<std::size_t>(v);
      } catch (const std::exception&) {
      }
    }
    return std::size_t{1};
  }();
  return n;
}

void set_operator_threads(std::size_t n) { g_thread_override.store(n); }

DenseOperator::DenseOperator(std::size_t rows, std::size_t cols, Vector values)
    : rows_(rows), cols_(cols), a_(std::move(values)) {
  require(a_.size() == rows_ * cols_, ErrorCode::ShapeMismatch, "dense operator size mismatch");
}

DenseOperator DenseOperator::identity(std::size_t n) {
  Vector a(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) a[i * n + i] = 1.0;
  return DenseOperator(n, n, std::move(a));
}

void DenseOperator::apply(std::span<const double> x, std::span<double> y) const {
  check_shape(*this, x.size(), y.size(), false);
  for (std::size_t r = 0; r < rows_; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols_; ++c) s += a_[r * cols_ + c] * x[c];
    y[r] = s;
  }
}

void DenseOperator::apply_adjoint(std::span<const double> y, std::span<double> x) const {
  check_shape(*this, y.size(), x.size(), true);
  std::fill(x.begin(), x.end(), 0.0);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) x[c] += a_[r * cols_ + c] * y[r];
}

SparseOperator::SparseOperator(CsrMatrix m) : m_(std::move(m)) {
  require(m_.row_ptr.size() == m_.rows + 1 && m_.col.size() == m_.val.size() &&
              m_.row_ptr.back() == m_.val.size(),
          ErrorCode::InvalidArgument, "inconsistent CSR structure");
}

void SparseOperator::apply(std::span<const double> x, std::span<double> y) const {
  check_shape(*this, x.size(), y.size(), false);
  for_rows(m_.rows, [&](std::size_t r) { y[r] = m_.row_dot(r, x); });
}

void SparseOperator::apply_adjoint(std::span<const double> y, std::span<double> x) const {
  check_shape(*this, y.size(), x.size(), true);
  std::fill(x.begin(), x.end(), 0.0);
  for (std::size_t r = 0; r < m_.rows; ++r) m_.row_scatter(r, y[r], x);
}

RowSubsetOperator::RowSubsetOperator(const SparseOperator& full, std::vector<std::size_t> rows)
    : full_(full), rows_(std::move(rows)) {
  for (auto r : rows_)
    require(r < full_.rows(), ErrorCode::InvalidArgument, "row subset index out of range");
}

void RowSubsetOperator::apply(std::span<const double> x, std::span<double> y) const {
  check_shape(*this, x.size(), y.size(), false);
  const auto& m = full_.matrix();
  for_rows(rows_.size(), [&](std::size_t i) { y[i] = m.row_dot(rows_[i], x); });
}

void RowSubsetOperator::apply_adjoint(std::span<const double> y, std::span<double> x) const {
  check_shape(*this, y.size(), x.size(), true);
  std::fill(x.begin(), x.end(), 0.0);
  const auto& m = full_.matrix();
  for (std::size_t i = 0; i < rows_.size(); ++i) m.row_scatter(rows_[i], y[i], x);
}

Vector gather(std::span<const double> v, const std::vector<std::size_t>& idx) {
  Vector out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    require(idx[i] < v.size(), ErrorCode::InvalidArgument, "gather index out of range");
    out[i] = v[idx[i]];
  }
  return out;
}

}  // namespace pnp
