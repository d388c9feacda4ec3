#include <doctest.h>

#include <cmath>
#include <random>

#include "dense_problem.hpp"
#include "error.hpp"
#include "solvers.hpp"

using namespace pnp;

namespace {

RunControl fixed_iterations(std::size_t n) {
  RunControl c;
  c.max_iter = n;
  c.early_stop = false;
  return c;
}

}  // namespace

TEST_CASE("CGLS solves the normal equations in n steps") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    DenseProblem d(6, 4, seed);
    const auto ref = oracle::solve(oracle::gram(d.a), oracle::matvec_t(d.a, d.b));
    const auto res = cgls(*d.op, d.b, 4, Vector(4, 0.0));
    CHECK(oracle::rel_err(res.x, ref) < 1e-8);
    CHECK(res.iterations == 4);
  }
}

TEST_CASE("shifted CGLS solves the augmented system") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    DenseProblem d(6, 4, seed);
    std::mt19937_64 rng(seed + 100);
    const auto anchor = oracle::random_vector(4, rng), x0 = oracle::random_vector(4, rng);
    const double rho = 0.7;
    const auto ref = oracle::tikhonov(d.a, d.b, rho, anchor);
    const auto res = cgls(*d.op, d.b, 4, x0, CglsShift{rho, anchor});
    CHECK(oracle::rel_err(res.x, ref) < 1e-8);
  }
}

TEST_CASE("CGLS breakdown is reported") {
  DenseProblem d(6, 4, 3);
  const auto ref = oracle::solve(oracle::gram(d.a), oracle::matvec_t(d.a, d.b));
  // starting at the solution the gradient vanishes immediately
  const auto res = cgls(*d.op, d.b, 5, ref);
  CHECK(res.iterations <= 1);
  CHECK(oracle::rel_err(res.x, ref) < 1e-10);
  const auto zero = cgls(*d.op, Vector(6, 0.0), 3, Vector(4, 0.0));
  CHECK(zero.breakdown);
  CHECK(zero.iterations == 0);
  CHECK(zero.x == Vector(4, 0.0));
  CHECK_THROWS_AS(cgls(*d.op, d.b, 0, ref), Error);
  CHECK_THROWS_AS(cgls(*d.op, Vector(5), 2, ref), Error);
  CHECK_THROWS_AS(cgls(*d.op, d.b, 2, ref, CglsShift{0.0, ref}), Error);
}

TEST_CASE("gradient inner solver") {
  DenseProblem d(6, 4, 4);
  std::mt19937_64 rng(5);
  const auto anchor = oracle::random_vector(4, rng), y0 = oracle::random_vector(4, rng);
  const double tau = 0.05;
  // one step by hand
  const auto r = oracle::matvec(d.a, y0);
  oracle::Vec res(6);
  for (std::size_t i = 0; i < 6; ++i) res[i] = r[i] - d.b[i];
  const auto g = oracle::matvec_t(d.a, res);
  const auto one = gd_inner(*d.op, d.b, 1, tau, anchor, y0);
  for (std::size_t j = 0; j < 4; ++j) CHECK(one[j] == doctest::Approx(anchor[j] - 2 * tau * g[j]));
  // the fixed point solves tau D(x) + ||x - anchor||^2 / 2, i.e. (2 tau A^T A + I) x = anchor + 2 tau A^T b
  const double small = 0.25 / spectral_norm_sq(d.a);
  const auto many = gd_inner(*d.op, d.b, 3000, small, anchor, y0);
  auto m = oracle::gram(d.a, 1.0 / (2 * small));
  auto rhs = oracle::matvec_t(d.a, d.b);
  for (std::size_t j = 0; j < 4; ++j) rhs[j] += anchor[j] / (2 * small);
  CHECK(oracle::rel_err(many, oracle::solve(m, rhs)) < 1e-10);
}

TEST_CASE("momentum sequence") {
  double t = 1.0;
  const Vector y{1.0, 2.0}, yp{0.0, 0.0};
  auto m = momentum_point(y, yp, t);
  CHECK(m.t == doctest::Approx((1 + std::sqrt(5.0)) / 2));
  CHECK(m.point == y);  // (t0 - 1) / t1 = 0
  m = momentum_point(y, yp, m.t);
  const double t1 = (1 + std::sqrt(5.0)) / 2, t2 = (1 + std::sqrt(1 + 4 * t1 * t1)) / 2;
  CHECK(m.t == doctest::Approx(t2));
  CHECK(m.point[1] == doctest::Approx(2.0 + (t1 - 1) / t2 * 2.0));
  CHECK_THROWS_AS(momentum_point(y, yp, 0.5), Error);
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS((FbsConfig{0.0, false}.validate()), Error);
  OAConfig oa;
  oa.phi = 1.5;
  CHECK_THROWS_AS(oa.validate(), Error);
  oa.phi = 0.5;
  oa.inner = CglsInner{0, 1.0};
  CHECK_THROWS_AS(oa.validate(), Error);
  oa.inner = GdInner{1, -1.0};
  CHECK_THROWS_AS(oa.validate(), Error);
  oa.inner = GdInner{2, 0.1};
  CHECK_NOTHROW(oa.validate());
}

TEST_CASE("plain FBS with identity is gradient descent") {
  DenseProblem d(8, 5, 6);
  const double tau = 0.2 / spectral_norm_sq(d.a);
  const auto rec = fbs_pnp(d.problem(), DenoiserSpec::identity(), {tau, false}, fixed_iterations(15));
  oracle::Vec x(5, 0.0);
  for (int k = 0; k < 15; ++k) {
    auto r = oracle::matvec(d.a, x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= d.b[i];
    const auto g = oracle::matvec_t(d.a, r);
    for (std::size_t j = 0; j < 5; ++j) x[j] -= 2 * tau * g[j];
  }
  CHECK(rec.rows.size() == 15);
  CHECK(oracle::rel_err(rec.final_x.vec(), x) < 1e-13);
  for (const auto& row : rec.rows) {
    CHECK(row.descent_ok);
    CHECK(row.dc == 0.0);
    CHECK(std::isnan(row.alpha));
    CHECK(row.sufficient.has_value());
  }
}

TEST_CASE("fast FBS follows the accelerated recursion") {
  DenseProblem d(8, 5, 7);
  const double tau = 0.4 / spectral_norm_sq(d.a), thr = 0.01;
  const auto rec = fbs_pnp(d.problem(), DenoiserSpec::soft_threshold(thr), {tau, true},
                           fixed_iterations(12));
  auto prox = [&](oracle::Vec v) {
    for (auto& e : v) e = std::copysign(std::max(std::abs(e) - thr, 0.0), e);
    return v;
  };
  oracle::Vec z(5, 0.0), zp = z;
  double t = 1.0;
  for (int k = 1; k <= 12; ++k) {
    oracle::Vec p = z;
    if (k >= 2) {
      const double tn = (1 + std::sqrt(1 + 4 * t * t)) / 2;
      for (std::size_t j = 0; j < 5; ++j) p[j] = z[j] + (t - 1) / tn * (z[j] - zp[j]);
      t = tn;
    }
    auto r = oracle::matvec(d.a, p);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= d.b[i];
    const auto g = oracle::matvec_t(d.a, r);
    for (std::size_t j = 0; j < 5; ++j) p[j] -= 2 * tau * g[j];
    zp = z;
    z = prox(p);
  }
  CHECK(oracle::rel_err(rec.final_x.vec(), z) < 1e-13);
}

TEST_CASE("FBS and ADMM reach the Tikhonov minimiser with a quadratic prox") {
  DenseProblem d(6, 4, 8);
  const double lam = 0.3;
  const auto ref = oracle::tikhonov(d.a, d.b, lam);
  const double tau = 0.4 / spectral_norm_sq(d.a);
  for (bool fast : {false, true}) {
    const auto rec = fbs_pnp(d.problem(), DenoiserSpec::quadratic_shrink(2 * tau * lam), {tau, fast},
                             fixed_iterations(fast ? 600 : 3000));
    CHECK(oracle::rel_err(rec.final_x.vec(), ref) < 1e-6);
  }
  OAConfig oa;
  oa.inner = CglsInner{50, 1.0};
  oa.phi = 1.0;
  const auto rec = admm_pnp(d.problem(), DenoiserSpec::quadratic_shrink(lam / 1.0), oa,
                            fixed_iterations(400));
  CHECK(oracle::rel_err(rec.final_x.vec(), ref) < 1e-6);
  for (const auto& row : rec.rows) CHECK_FALSE(row.sufficient.has_value());
}

TEST_CASE("ADMM warm starts agree at the fixed point") {
  DenseProblem d(6, 4, 9);
  const double lam = 0.5, rho = 2.0;
  const auto ref = oracle::tikhonov(d.a, d.b, lam);
  for (auto ws : {WarmStart::FromX, WarmStart::FromZ, WarmStart::FromMomentum}) {
    OAConfig oa;
    oa.inner = CglsInner{10, rho};
    oa.warm_start = ws;
    const auto rec = admm_pnp(d.problem(), DenoiserSpec::quadratic_shrink(lam / rho), oa,
                              fixed_iterations(500));
    CHECK(oracle::rel_err(rec.final_x.vec(), ref) < 1e-6);
  }
}

TEST_CASE("ADMM with phi = 0 and one gradient step is plain FBS") {
  DenseProblem d(9, 6, 10);
  const double tau = 0.3 / spectral_norm_sq(d.a);
  const auto h = DenoiserSpec::soft_threshold(0.02);
  OAConfig oa;
  oa.inner = GdInner{1, tau};
  oa.phi = 0.0;
  oa.warm_start = WarmStart::FromZ;
  std::vector<Vector> fbs_iter, admm_iter;
  RunControl c = fixed_iterations(20);
  c.observer = [&](std::size_t, const Image&, const Image& z) { fbs_iter.push_back(z.vec()); };
  fbs_pnp(d.problem(), h, {tau, false}, c);
  c.observer = [&](std::size_t, const Image&, const Image& z) { admm_iter.push_back(z.vec()); };
  admm_pnp(d.problem(), h, oa, c);
  REQUIRE(fbs_iter.size() == 20);
  REQUIRE(admm_iter.size() == 20);
  // u stays zero, so ADMM's consistency step is FBS's gradient step; not the identity
  // denoiser here, which makes the check stricter
  for (std::size_t k = 0; k < 20; ++k) CHECK(oracle::rel_err(admm_iter[k], fbs_iter[k]) <= 1e-12);
}

TEST_CASE("run record bookkeeping") {
  DenseProblem d(12, 5, 11);
  std::mt19937_64 rng(12);
  const auto truth_v = oracle::random_vector(5, rng);
  const Image truth(5, 1, truth_v);
  // validation rows: the first three rows of A
  oracle::Mat av(d.a.begin(), d.a.begin() + 3);
  DenseOperator val(3, 5, oracle::flatten(av));
  const oracle::Vec bv(d.b.begin(), d.b.begin() + 3);
  Problem p = d.problem();
  p.val_op = &val;
  p.val_data = bv;
  p.truth = &truth;
  const double tau = 0.2 / spectral_norm_sq(d.a);
  RunControl c;
  c.max_iter = 60;
  c.patience = 4;
  std::vector<Image> zs;
  c.observer = [&](std::size_t, const Image&, const Image& z) { zs.push_back(z); };
  const auto rec = fbs_pnp(p, DenoiserSpec::identity(), {tau, false}, c);
  REQUIRE(!rec.rows.empty());
  std::vector<double> s;
  for (std::size_t i = 0; i < rec.rows.size(); ++i) {
    const auto& row = rec.rows[i];
    CHECK(row.k == i + 1);
    CHECK(row.mse == doctest::Approx(oracle::rel_err(zs[i].vec(), truth_v)));
    CHECK(row.s_err == doctest::Approx(residual_err(zs[i].values(), val, bv)));
    s.push_back(row.s_err);
  }
  const auto dec = should_stop(s, 4, 60);
  CHECK(rec.selected_k == dec.k);
  CHECK(rec.selected_x == zs[rec.selected_k - 1]);
  CHECK(rec.final_x == zs.back());
  if (rec.rows.size() < 60) CHECK(rec.stop_reason == StopReason::CrossValidation);
}

TEST_CASE("non-finite iterates abort with a partial record") {
  DenseProblem d(6, 4, 13);
  int calls = 0;
  const auto h = DenoiserSpec::custom(
      [&](const Image& x) {
        Image y = x;
        if (++calls == 4) y.vec()[0] = std::nan("");
        return y;
      },
      "poison");
  const auto rec = fbs_pnp(d.problem(), h, {1e-3, false}, fixed_iterations(10));
  CHECK(rec.aborted());
  CHECK(rec.stop_reason == StopReason::NonFinite);
  CHECK(rec.rows.size() == 3);
  CHECK_FALSE(rec.error.empty());
  // a diverging step size also ends the run without throwing
  const auto blow = fbs_pnp(d.problem(), DenoiserSpec::identity(), {1e3, false}, fixed_iterations(500));
  CHECK(blow.aborted());
}

TEST_CASE("per-iteration alpha search") {
  DenseProblem d(12, 6, 14);
  oracle::Mat av(d.a.begin(), d.a.begin() + 4);
  DenseOperator val(4, 6, oracle::flatten(av));
  const oracle::Vec bv(d.b.begin(), d.b.begin() + 4);
  Problem p = d.problem();
  p.val_op = &val;
  p.val_data = bv;
  int ca = 0, cb = 0;
  const auto a = DenoiserSpec::custom([&](const Image& x) { ++ca; return quadratic_shrink(x, 0.5); }, "a");
  const auto b = DenoiserSpec::custom([&](const Image& x) { ++cb; return x; }, "b");
  RunControl c = fixed_iterations(8);
  c.alpha_search = AlphaSearch{21};
  const auto rec = fbs_pnp(p, DenoiserSpec::combined(a, b, 0.5), {0.01, false}, c);
  CHECK(ca == 8);
  CHECK(cb == 8);
  for (const auto& row : rec.rows) {
    CHECK(row.alpha >= 0.0);
    CHECK(row.alpha <= 1.0);
  }
  CHECK_THROWS_AS(fbs_pnp(p, a, {0.01, false}, c), Error);
  CHECK_THROWS_AS(fbs_pnp(d.problem(), DenoiserSpec::combined(a, b, 0.5), {0.01, false}, c), Error);
}

TEST_CASE("CGLS run records every iterate") {
  DenseProblem d(10, 4, 15);
  const auto rec = cgls_run(d.problem(), fixed_iterations(3));
  CHECK(rec.rows.size() == 3);
  const auto direct = cgls(*d.op, d.b, 3, Vector(4, 0.0));
  CHECK(oracle::rel_err(rec.final_x.vec(), direct.x) < 1e-14);
  for (const auto& row : rec.rows) CHECK(row.regime == DescentRegime::StrictDescent);
  // exhausting the Krylov space ends the run early
  const auto all = cgls_run(d.problem(), fixed_iterations(20));
  CHECK(all.rows.size() <= 6);
}

TEST_CASE("problem validation") {
  DenseProblem d(6, 4, 16);
  Problem p = d.problem();
  p.width = 3;
  CHECK_THROWS_AS(fbs_pnp(p, DenoiserSpec::identity(), {0.1, false}, RunControl{}), Error);
  RunControl c;
  c.max_iter = 0;
  CHECK_THROWS_AS(cgls_run(d.problem(), c), Error);
}
