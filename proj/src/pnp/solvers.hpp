#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "denoise.hpp"
#include "diagnostics.hpp"
#include "image.hpp"
#include "linear_operator.hpp"
#include "selection.hpp"

namespace pnp {

// ---- inner building blocks -------------------------------------------------------------

struct CglsShift {
  double rho;
  std::span<const double> anchor;
};

struct CglsResult {
  Vector x;
  std::size_t iterations = 0;
  bool breakdown = false;  // stopped before N steps: residual vanished or direction degenerate
};

// N steps of CGLS on  min ||Ax - b||^2 (+ rho ||x - anchor||^2), started at x0.
CglsResult cgls(const LinearOperator& a, std::span<const double> b, std::size_t n,
                std::span<const double> x0, std::optional<CglsShift> shift = std::nullopt);

// Incremental CGLS for callers that inspect every iterate.
class CglsIterator {
 public:
  CglsIterator(const LinearOperator& a, std::span<const double> b, std::span<const double> x0,
               std::optional<CglsShift> shift = std::nullopt);
  // Returns false (leaving x unchanged) on breakdown or once the residual has vanished.
  bool step();
  const Vector& x() const noexcept { return x_; }

 private:
  const LinearOperator& a_;
  double rho_ = 0.0;
  Vector anchor_, x_, r_, s_, p_, q_;
  double gamma_ = 0.0;
  double floor_ = 0.0;
};

// x_{j+1} = anchor - tau' * grad D(x_j), x_0 = y0; the fixed point solves the
// proximal data-consistency problem for tau' D.
Vector gd_inner(const LinearOperator& a, std::span<const double> b, std::size_t n, double tau,
                std::span<const double> anchor, std::span<const double> y0);

struct MomentumStep {
  Vector point;
  double t;
};

// t_k = (1 + sqrt(1 + 4 t_{k-1}^2)) / 2, point = y_k + (t_{k-1} - 1) / t_k (y_k - y_{k-1}).
MomentumStep momentum_point(std::span<const double> y_k, std::span<const double> y_prev,
                            double t_prev);

// ---- configuration -----------------------------------------------------------------------

struct FbsConfig {
  double tau = 1e-5;
  bool fast = false;

  void validate() const;
};

struct CglsInner {
  std::size_t iterations = 100;
  double rho = 1.0;
};
struct GdInner {
  std::size_t iterations = 1;
  double tau = 1e-5;
};

enum class WarmStart { FromX, FromZ, FromMomentum };

struct OAConfig {
  std::variant<CglsInner, GdInner> inner = CglsInner{};
  WarmStart warm_start = WarmStart::FromX;
  double phi = 1.0;  // scaled noise update u += phi (x - z)

  void validate() const;
};

// ---- run bookkeeping ---------------------------------------------------------------------

// Everything the iteration needs to know about the data. The fit part drives the updates;
// the validation part and the ground truth, when present, only feed diagnostics/selection.
struct Problem {
  const LinearOperator* fit_op = nullptr;
  std::span<const double> fit_data;
  const LinearOperator* val_op = nullptr;
  std::span<const double> val_data;
  const Image* truth = nullptr;
  std::size_t width = 0, height = 0;
  std::optional<Image> initial;  // defaults to zeros

  void validate() const;
};

struct RunControl {
  std::size_t max_iter = 250;
  std::size_t patience = 10;
  bool early_stop = true;  // honour the cross-validation stopping rule
  DescentConfig descent;
  // When set, the denoiser must be Combined and its weight is re-chosen every iteration.
  std::optional<AlphaSearch> alpha_search;
  std::function<void(std::size_t k, const Image& x, const Image& z)> observer;
};

struct IterationRow {
  std::size_t k = 0;
  double mse = 0, psnr = 0, ssim = 0, d_err = 0, s_err = 0, dc = 0, alpha = 0;
  bool descent_ok = false;
  double descent_inner = 0;
  std::optional<bool> sufficient;  // only meaningful for gradient-step consistency updates
  DescentRegime regime = DescentRegime::Violated;
  bool dc_stalled = false;
};

enum class StopReason { MaxIter, CrossValidation, NonFinite };

struct RunRecord {
  std::vector<IterationRow> rows;
  std::size_t selected_k = 0;
  Image selected_x;
  Image final_x;
  StopReason stop_reason = StopReason::MaxIter;
  std::string error;  // set when the run aborted

  bool aborted() const noexcept { return stop_reason == StopReason::NonFinite; }
};

std::string to_string(StopReason r);

// ---- solvers -----------------------------------------------------------------------------

// Plain CGLS on the fit data, recording diagnostics for every iterate.
RunRecord cgls_run(const Problem& prob, const RunControl& ctl);

// x_k = p_{k-1} - tau grad D(p_{k-1}), z_k = H(x_k); p is z (plain) or the momentum point.
RunRecord fbs_pnp(const Problem& prob, const DenoiserSpec& h, const FbsConfig& cfg,
                  const RunControl& ctl);

// x_{k+1} = inner solve of D(x) + rho ||x - (z_k - u_k)||^2, z_{k+1} = H(x_{k+1} + u_k),
// u_{k+1} = u_k + phi (x_{k+1} - z_{k+1}).
RunRecord admm_pnp(const Problem& prob, const DenoiserSpec& h, const OAConfig& oa,
                   const RunControl& ctl);

}  // namespace pnp
