// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit when any fails.
// Desk scale: 64x64 phantom, 60 angles, default fan geometry, 1% noise, at most 250 iterations.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dense_problem.hpp"
#include "denoise.hpp"
#include "diagnostics.hpp"
#include "experiment.hpp"
#include "oracles.hpp"
#include "selection.hpp"
#include "solvers.hpp"
#include "tomo_model.hpp"

using namespace pnp;
namespace fs = std::filesystem;

namespace {

constexpr std::size_t kDeskSize = 64;
constexpr std::size_t kDeskAngles = 60;
constexpr double kDeskNoise = 0.01;
constexpr double kDeskCv = 0.01;
constexpr std::uint64_t kDeskSeed = 7;
constexpr std::size_t kDeskIter = 250;
constexpr double kDeskTau = 2e-4;
constexpr double kPatchSigma = 0.004;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::unique_ptr<ModelProblem> desk_problem(std::uint64_t seed = kDeskSeed) {
  return std::make_unique<ModelProblem>(FanBeamGeometry::with_defaults(kDeskSize, kDeskAngles),
                                        kDeskNoise, seed, kDeskCv);
}

RunControl desk_control(bool early_stop) {
  RunControl c;
  c.max_iter = kDeskIter;
  c.patience = 10;
  c.early_stop = early_stop;
  return c;
}

DenoiserSpec patch_denoiser() { return DenoiserSpec::patch_collaborative(weak_classical_params(kPatchSigma)); }

DenoiserSpec cnn_denoiser() {
  return DenoiserSpec::cnn_residual(
      std::make_shared<const CnnWeights>(load_cnn_weights(builtin_cnn_weights().string())));
}

std::size_t argmin_mse_k(const RunRecord& r) {
  const auto it = std::min_element(r.rows.begin(), r.rows.end(),
                                   [](const auto& a, const auto& b) { return a.mse < b.mse; });
  return it->k;
}

double selected_mse(const RunRecord& r) { return r.rows.at(r.selected_k - 1).mse; }

// ---- 1 --------------------------------------------------------------------------------------

// Exact length of the segment S + t u, t in [0, t_end], inside [x0,x1] x [y0,y1] (Liang-Barsky).
double clip_length(double sx, double sy, double ux, double uy, double t_end, double x0, double x1,
                   double y0, double y1) {
  double lo = 0.0, hi = t_end;
  auto edge = [&](double p, double q) {
    if (p == 0.0) return q >= 0.0;
    const double r = q / p;
    if (p < 0.0)
      lo = std::max(lo, r);
    else
      hi = std::min(hi, r);
    return lo <= hi;
  };
  if (!edge(-ux, sx - x0) || !edge(ux, x1 - sx) || !edge(-uy, sy - y0) || !edge(uy, y1 - sy))
    return 0.0;
  return std::max(0.0, hi - lo);
}

// Dense system matrix built pixel by pixel, independent of the ray-walking projector.
oracle::Mat dense_fan_matrix(const FanBeamGeometry& g) {
  const std::size_t n = g.image_size;
  const double half = 0.5 * static_cast<double>(n);
  const double gmax = std::asin(0.5 * g.detector_width / g.source_distance);
  oracle::Mat m;
  for (std::size_t a = 0; a < g.num_angles; ++a) {
    const double beta = 2.0 * M_PI * static_cast<double>(a) / static_cast<double>(g.num_angles);
    const double sx = g.source_distance * std::cos(beta), sy = g.source_distance * std::sin(beta);
    for (std::size_t j = 0; j < g.rays_per_angle; ++j) {
      const double gam =
          gmax * ((2.0 * static_cast<double>(j) + 1.0) / static_cast<double>(g.rays_per_angle) - 1.0);
      const double ux = -std::cos(beta + gam), uy = -std::sin(beta + gam);
      oracle::Vec row(n * n, 0.0);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
          const double x0 = static_cast<double>(c) - half;
          const double y1 = half - static_cast<double>(r);
          row[r * n + c] = clip_length(sx, sy, ux, uy, 2.0 * g.source_distance, x0, x0 + 1.0,
                                       y1 - 1.0, y1);
        }
      m.push_back(std::move(row));
    }
  }
  return m;
}

Outcome criterion_1() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::vector<std::pair<std::size_t, std::size_t>> shapes{
      {8, 12}, {12, 20}, {16, 24}, {24, 30}, {32, 40}, {48, 50}, {64, 60}};
  double worst = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    const auto [n, angles] = shapes[i % shapes.size()];
    static std::vector<std::unique_ptr<ForwardOperator>> ops(shapes.size());
    auto& op = ops[i % shapes.size()];
    if (!op) op = std::make_unique<ForwardOperator>(build_operator(FanBeamGeometry::with_defaults(n, angles)));
    Vector x(op->cols()), y(op->rows());
    for (auto& v : x) v = u(rng);
    for (auto& v : y) v = u(rng);
    const double lhs = dot(op->apply(x), y), rhs = dot(x, op->apply_adjoint(y));
    worst = std::max(worst, std::abs(lhs - rhs) / std::abs(lhs));
    ++pairs;
  }

  // even ray count and 7 angles keep every ray off the pixel grid lines
  FanBeamGeometry g = FanBeamGeometry::with_defaults(8, 7, 12);
  const auto op = build_operator(g);
  const auto dense = dense_fan_matrix(g);
  std::size_t dense_nnz = 0;
  for (const auto& row : dense) dense_nnz += std::count_if(row.begin(), row.end(), [](double v) { return v > 1e-12; });
  double worst_mult = 0.0;
  for (int t = 0; t < 10; ++t) {
    oracle::Vec x(64);
    for (auto& v : x) v = 2.0 * u(rng) - 1.0;
    const auto ref = oracle::matvec(dense, x);
    const auto got = op.apply(x);
    double diff = 0.0;
    for (std::size_t k = 0; k < ref.size(); ++k) diff = std::max(diff, std::abs(got[k] - ref[k]));
    worst_mult = std::max(worst_mult, diff / std::max(1.0, *std::max_element(ref.begin(), ref.end())));
  }
  return {worst <= 1e-10 && worst_mult <= 1e-12 && dense_nnz == op.matrix().nnz(),
          fmt("%zu adjoint pairs, worst rel %.2e (tol 1e-10); 8x8 dense multiply worst %.2e (tol 1e-12, "
              "%zu/%zu nonzeros)",
              pairs, worst, worst_mult, op.matrix().nnz(), dense_nnz)};
}

// ---- 2 --------------------------------------------------------------------------------------

Outcome criterion_2() {
  double worst_plain = 0.0, worst_shift = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    DenseProblem d(6, 4, 1000 + seed);
    const auto ref = oracle::solve(oracle::gram(d.a), oracle::matvec_t(d.a, d.b));
    worst_plain = std::max(worst_plain, oracle::rel_err(cgls(*d.op, d.b, 4, Vector(4, 0.0)).x, ref));
    std::mt19937_64 rng(seed);
    const auto anchor = oracle::random_vector(4, rng);
    const double rho = 0.5 + static_cast<double>(seed) / 10.0;
    const auto sref = oracle::tikhonov(d.a, d.b, rho, anchor);
    worst_shift = std::max(
        worst_shift,
        oracle::rel_err(cgls(*d.op, d.b, 4, Vector(4, 0.0), CglsShift{rho, anchor}).x, sref));
  }
  return {worst_plain <= 1e-8 && worst_shift <= 1e-8,
          fmt("20 systems 6x4: plain %.2e, shifted %.2e (tol 1e-8)", worst_plain, worst_shift)};
}

// ---- 3 --------------------------------------------------------------------------------------

RunControl fixed(std::size_t n) {
  RunControl c;
  c.max_iter = n;
  c.early_stop = false;
  return c;
}

Outcome criterion_3() {
  DenseProblem d(6, 4, 3003);
  const double lam = 0.4;
  const auto ref = oracle::tikhonov(d.a, d.b, lam);
  const double tau = 0.4 / spectral_norm_sq(d.a);
  const auto q = DenoiserSpec::quadratic_shrink(2.0 * tau * lam);
  const double e_fbs = oracle::rel_err(fbs_pnp(d.problem(), q, {tau, false}, fixed(5000)).final_x.vec(), ref);
  const double e_fast = oracle::rel_err(fbs_pnp(d.problem(), q, {tau, true}, fixed(2000)).final_x.vec(), ref);
  OAConfig oa;
  oa.inner = CglsInner{50, 1.0};
  oa.phi = 1.0;
  const double e_admm = oracle::rel_err(
      admm_pnp(d.problem(), DenoiserSpec::quadratic_shrink(lam), oa, fixed(500)).final_x.vec(), ref);

  DenseProblem l(10, 6, 3004);
  const double ltau = 0.45 / spectral_norm_sq(l.a);
  const double t = 1.5 * ltau;
  const auto lref = oracle::lasso_cd(l.a, l.b, t / ltau);
  const double e_lasso = oracle::rel_err(
      fbs_pnp(l.problem(), DenoiserSpec::soft_threshold(t), {ltau, false}, fixed(40000)).final_x.vec(),
      lref);
  const auto zeros = std::count_if(lref.begin(), lref.end(), [](double v) { return v == 0.0; });
  return {e_fbs <= 1e-4 && e_fast <= 1e-4 && e_admm <= 1e-4 && e_lasso <= 1e-5,
          fmt("Tikhonov fbs %.2e fast %.2e admm %.2e (tol 1e-4); lasso %.2e (tol 1e-5, %td zeros)",
              e_fbs, e_fast, e_admm, e_lasso, zeros)};
}

// ---- 4 --------------------------------------------------------------------------------------

Outcome criterion_4() {
  const auto mp = desk_problem();
  const auto prob = mp->problem();
  OAConfig oa;
  oa.inner = GdInner{1, kDeskTau};
  oa.phi = 0.0;
  oa.warm_start = WarmStart::FromZ;
  std::vector<Vector> f, a;
  RunControl c = fixed(20);
  c.observer = [&](std::size_t, const Image&, const Image& z) { f.push_back(z.vec()); };
  fbs_pnp(prob, DenoiserSpec::identity(), {kDeskTau, false}, c);
  c.observer = [&](std::size_t, const Image&, const Image& z) { a.push_back(z.vec()); };
  admm_pnp(prob, DenoiserSpec::identity(), oa, c);
  if (f.size() != 20 || a.size() != 20) return {false, "iteration count mismatch"};
  double worst = 0.0;
  for (std::size_t k = 0; k < 20; ++k) worst = std::max(worst, oracle::rel_err(a[k], f[k]));
  return {worst <= 1e-12, fmt("20 desk iterations, worst rel diff %.2e (tol 1e-12)", worst)};
}

// ---- CGLS runs shared by 5 and 6 ------------------------------------------------------

struct DeskRuns {
  std::unique_ptr<ModelProblem> mp = desk_problem();
  RunRecord cgls_full, cgls_stopped;
};

DeskRuns& desk() {
  static DeskRuns d = [] {
    DeskRuns r;
    const auto prob = r.mp->problem();
    r.cgls_full = cgls_run(prob, desk_control(false));
    r.cgls_stopped = cgls_run(prob, desk_control(true));
    return r;
  }();
  return d;
}

Outcome criterion_5() {
  const auto& r = desk().cgls_full;
  if (r.rows.size() != kDeskIter) return {false, fmt("ran %zu iterations", r.rows.size())};
  const std::size_t k = argmin_mse_k(r);
  const double mn = r.rows[k - 1].mse, last = r.rows.back().mse;
  return {k < kDeskIter && last >= 1.1 * mn,
          fmt("min MSE %.4f at k=%zu (< 250); MSE at 250 %.4f = %.3f x min (>= 1.1)", mn, k, last,
              last / mn)};
}

Outcome criterion_6() {
  const auto& d = desk();
  const auto prob = d.mp->problem();
  const double patch =
      fbs_pnp(prob, patch_denoiser(), {kDeskTau, false}, desk_control(false)).rows.back().mse;
  const double cnn =
      fbs_pnp(prob, cnn_denoiser(), {kDeskTau, false}, desk_control(false)).rows.back().mse;
  const double cg = selected_mse(d.cgls_stopped);
  return {patch < cg && patch < cnn,
          fmt("patch FBS final %.4f < CGLS at selected k=%zu %.4f, < CNN FBS final %.4f", patch,
              d.cgls_stopped.selected_k, cg, cnn)};
}

Outcome criterion_7() {
  const auto mp = desk_problem();
  const auto cnn = cnn_denoiser();
  std::vector<double> sel;
  std::string detail;
  for (double a : {1.0, 0.1, 0.01}) {
    const auto r = fbs_pnp(mp->problem(), DenoiserSpec::attenuated(cnn, a), {kDeskTau, false},
                           desk_control(true));
    sel.push_back(selected_mse(r));
    detail += fmt("alpha %.2f: %.4f (k=%zu); ", a, sel.back(), r.selected_k);
  }
  const bool monotone = sel[1] <= sel[0] && sel[2] <= sel[1];

  std::mt19937_64 rng(77);
  std::normal_distribution<double> nd(0.0, 0.05);
  const Image truth = shepp_logan(kDeskSize);
  double worst = 0.0;
  for (int t = 0; t < 5; ++t) {
    Image x = truth;
    for (auto& v : x.vec()) v += nd(rng);
    const double base = norm2(sub(cnn(x).values(), x.values()));
    for (double a : {1.0, 0.5, 0.1, 0.01, 1e-4}) {
      const double got = norm2(sub(DenoiserSpec::attenuated(cnn, a)(x).values(), x.values()));
      worst = std::max(worst, std::abs(got - a * base) / (a * base));
    }
  }
  return {monotone && worst <= 1e-12,
          detail + fmt("norm identity worst rel %.2e (tol 1e-12)", worst)};
}

Outcome criterion_8() {
  std::size_t good = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto mp = desk_problem(seed);
    const auto full = cgls_run(mp->problem(), desk_control(false));
    const auto stopped = cgls_run(mp->problem(), desk_control(true));
    const std::size_t kmin = argmin_mse_k(full), ksel = stopped.selected_k;
    const std::size_t gap = ksel > kmin ? ksel - kmin : kmin - ksel;
    good += gap <= 25;
    detail += fmt("seed %llu: k_sel %zu vs argmin %zu; ", static_cast<unsigned long long>(seed),
                  ksel, kmin);
  }
  return {good >= 3, detail + fmt("%zu/5 within 25 (need 3)", good)};
}

// ---- 9 --------------------------------------------------------------------------------------

Outcome criterion_9() {
  const Image dummy(4, 4, 0.0);
  double worst = 0.0;
  for (double target : {0.0, 0.137, 0.5, 0.81234, 1.0}) {
    const auto s = [target](double a) { return 3.0 * (a - target) * (a - target) + 0.25; };
    worst = std::max(worst, std::abs(select_alpha(dummy, dummy, s) - target));
  }

  const auto mp = desk_problem();
  RunControl c = desk_control(false);
  c.alpha_search = AlphaSearch{};
  const auto h = DenoiserSpec::combined(cnn_denoiser(), patch_denoiser(), 0.5);
  const auto r = fbs_pnp(mp->problem(), h, {kDeskTau, false}, c);
  if (r.rows.size() < 20) return {false, "combined run too short"};
  double head = 0.0, tail = 0.0;
  for (std::size_t i = 0; i < 10; ++i) {
    head += r.rows[i].alpha / 10.0;
    tail += r.rows[r.rows.size() - 1 - i].alpha / 10.0;
  }
  return {worst <= 1e-3 && head > tail,
          fmt("quadratic minimiser worst error %.2e (tol 1e-3); alpha trace mean first 10 %.4f > "
              "last 10 %.4f",
              worst, head, tail)};
}

// ---- 10 -------------------------------------------------------------------------------------

Outcome criterion_10() {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto rv = [&](std::size_t n) {
    Vector v(n);
    for (auto& e : v) e = u(rng);
    return v;
  };
  double hom = 0.0;
  for (int t = 0; t < 20; ++t) {
    const auto xk = rv(50), xp = rv(50), zk = rv(50);
    const double base = dc_ratio(xk, xp, zk);
    for (double a : {1e-3, 0.5, 7.0, 1e4}) {
      Vector sx = xk, sp = xp, sz = zk;
      for (auto* v : {&sx, &sp, &sz})
        for (auto& e : *v) e *= a;
      hom = std::max(hom, std::abs(dc_ratio(sx, sp, sz) - base) / base);
    }
  }

  Image img(32, 32);
  std::uniform_real_distribution<double> pix(0.0, 1.0);
  for (auto& v : img.vec()) v = pix(rng);
  const double s = ssim(img, img);

  Image ref(16, 16), off(16, 16);
  for (std::size_t i = 0; i < ref.size(); ++i) {
    ref.vec()[i] = pix(rng) * 0.5;
    off.vec()[i] = ref.vec()[i] + ((i % 2) ? 0.1 : -0.1);
  }
  const double p = psnr(off.values(), ref.values());

  DenseProblem d(8, 5, 4242);
  DescentConfig zero;
  std::size_t agree = 0, total = 0;
  for (int t = 0; t < 200; ++t) {
    const auto x = rv(5), dir = rv(5);
    const bool strict = descent_inner(dir, x, *d.op, d.b) > 0.0;
    const auto regime = generalized_descent_ok(dir, x, zero, *d.op, d.b, static_cast<std::size_t>(t + 1));
    const bool ok = regime == DescentRegime::StrictDescent;
    agree += (ok == strict) && (strict || regime == DescentRegime::Violated);
    ++total;
  }
  return {hom <= 1e-12 && s == 1.0 && std::abs(p - 20.0) <= 1e-9 && agree == total,
          fmt("dc homogeneity %.2e (tol 1e-12); ssim(x,x) = %.17g; psnr offset %.12f dB (tol 1e-9); "
              "descent rule agrees %zu/%zu",
              hom, s, p, agree, total)};
}

// ---- 11 -------------------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

Outcome criterion_11() {
  const fs::path root = fs::temp_directory_path() / "pnpct_acceptance_determinism";
  fs::remove_all(root);
  ExperimentConfig cfg;
  cfg.phantom_size = kDeskSize;
  cfg.geometry = FanBeamGeometry::with_defaults(kDeskSize, kDeskAngles);
  cfg.noise_level = kDeskNoise;
  cfg.seed = 19;
  cfg.cv_fraction = kDeskCv;
  cfg.algorithm = Algorithm::FbsFast;
  cfg.fbs = {4e-5, true};
  cfg.denoiser = DenoiserSpec::combined(cnn_denoiser(), patch_denoiser(), 0.5);
  cfg.control = desk_control(true);
  cfg.control.max_iter = 60;
  cfg.control.alpha_search = AlphaSearch{};
  run_experiment(cfg, root / "a");
  run_experiment(cfg, root / "b");
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(root / "a")) {
    if (e.path().extension() != ".csv") continue;
    ++files;
    if (slurp(e.path()) != slurp(root / "b" / e.path().filename()))
      return {false, "differs: " + e.path().filename().string()};
  }
  fs::remove_all(root);
  return {files >= 4, fmt("%zu CSV files byte-identical across two runs", files)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"operator correctness", criterion_1},        {"CGLS exactness", criterion_2},
      {"classical equivalence", criterion_3},        {"ADMM to FBS reduction", criterion_4},
      {"CGLS semi-convergence", criterion_5},        {"denoiser helps", criterion_6},
      {"attenuation monotonicity", criterion_7},     {"stopping rule quality", criterion_8},
      {"alpha search", criterion_9},                 {"diagnostics algebra", criterion_10},
      {"determinism", criterion_11},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("[%s] %2zu %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed ? 1 : 0;
}
