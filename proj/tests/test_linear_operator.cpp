#include <doctest.h>

#include <random>

#include "error.hpp"
#include "linear_operator.hpp"
#include "oracles.hpp"
#include "tomo_model.hpp"

using namespace pnp;

TEST_CASE("dense operator matches nested-loop products") {
  std::mt19937_64 rng(1);
  const auto a = oracle::random_matrix(7, 5, rng);
  const DenseOperator op(7, 5, oracle::flatten(a));
  const auto x = oracle::random_vector(5, rng), y = oracle::random_vector(7, rng);
  const auto ax = op.apply(x), aty = op.apply_adjoint(y);
  const auto rx = oracle::matvec(a, x), ry = oracle::matvec_t(a, y);
  for (std::size_t i = 0; i < 7; ++i) CHECK(ax[i] == doctest::Approx(rx[i]).epsilon(1e-14));
  for (std::size_t i = 0; i < 5; ++i) CHECK(aty[i] == doctest::Approx(ry[i]).epsilon(1e-14));
  CHECK_THROWS_AS(DenseOperator(3, 3, Vector(8)), Error);
}

TEST_CASE("identity operator") {
  const auto id = DenseOperator::identity(4);
  const Vector x{1, -2, 3, 0.5};
  CHECK(id.apply(x) == x);
  CHECK(id.apply_adjoint(x) == x);
}

TEST_CASE("sparse operator agrees with its dense expansion") {
  const auto op = build_operator(FanBeamGeometry::with_defaults(8, 6));
  const auto& m = op.matrix();
  oracle::Mat dense(m.rows, oracle::Vec(m.cols, 0.0));
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k) dense[r][m.col[k]] = m.val[k];
  std::mt19937_64 rng(5);
  const auto x = oracle::random_vector(m.cols, rng), y = oracle::random_vector(m.rows, rng);
  const auto ax = op.apply(x), aty = op.apply_adjoint(y);
  const auto rx = oracle::matvec(dense, x), ry = oracle::matvec_t(dense, y);
  CHECK(oracle::rel_err(ax, rx) < 1e-14);
  CHECK(oracle::rel_err(aty, ry) < 1e-14);
}

TEST_CASE("row subset selects the requested rows") {
  const auto op = build_operator(FanBeamGeometry::with_defaults(12, 5));
  const std::vector<std::size_t> rows{0, 3, 17, 40};
  const RowSubsetOperator sub_op(op, rows);
  CHECK(sub_op.rows() == 4);
  CHECK(sub_op.cols() == op.cols());
  std::mt19937_64 rng(8);
  const auto x = oracle::random_vector(op.cols(), rng), y = oracle::random_vector(4, rng);
  const auto full = op.apply(x);
  const auto part = sub_op.apply(x);
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(part[i] == full[rows[i]]);
  Vector yf(op.rows(), 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i) yf[rows[i]] = y[i];
  CHECK(oracle::rel_err(sub_op.apply_adjoint(y), op.apply_adjoint(yf)) < 1e-14);
}

TEST_CASE("threaded apply equals serial apply") {
  const auto op = build_operator(FanBeamGeometry::with_defaults(32, 20));
  std::mt19937_64 rng(2);
  const auto x = oracle::random_vector(op.cols(), rng);
  set_operator_threads(1);
  const auto serial = op.apply(x);
  set_operator_threads(4);
  const auto threaded = op.apply(x);
  set_operator_threads(0);
  CHECK(serial == threaded);
}
