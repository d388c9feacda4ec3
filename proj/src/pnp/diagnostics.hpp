#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>

#include "image.hpp"
#include "linear_operator.hpp"

namespace pnp {

// D(x) = ||Ax - b||^2 and its gradient 2 A^T (Ax - b).
double data_misfit(const LinearOperator& a, std::span<const double> b, std::span<const double> x);
Vector misfit_gradient(const LinearOperator& a, std::span<const double> b,
                       std::span<const double> x);

// ||z_k - x_k|| / ||x_k - x_{k-1}||. Throws ErrorCode::StalledConsistency when x_k == x_{k-1}.
double dc_ratio(std::span<const double> x_k, std::span<const double> x_prev,
                std::span<const double> z_k);

// <d, -grad D(x)>; d is a descent direction for D when this is positive.
double descent_inner(std::span<const double> d, std::span<const double> x,
                     const LinearOperator& a, std::span<const double> b);

// ||z_k - x_k|| < ||grad_step||, which guarantees descent of the combined FBS step.
bool sufficient_check(std::span<const double> x_k, std::span<const double> z_k,
                      std::span<const double> grad_step);

struct DescentConfig {
  double eps1 = 0.0;
  double eps2 = 0.0;
  std::optional<std::size_t> k_cap;

  void validate() const;
};

enum class DescentRegime { StrictDescent, FloorRegime, Violated };

// Decision rule shared by generalized_descent_ok and the solvers, which already hold
// <d, -grad D(x)> and D(x). misfit_after is only evaluated in the floor regime.
DescentRegime classify_descent(double inner, double misfit,
                               const std::function<double()>& misfit_after,
                               const DescentConfig& cfg, std::size_t k);

// Strict descent is demanded while D(x) > eps2 (or k <= k_cap); afterwards the step may
// wander as long as it does not push the misfit below eps1.
DescentRegime generalized_descent_ok(std::span<const double> d, std::span<const double> x,
                                     const DescentConfig& cfg, const LinearOperator& a,
                                     std::span<const double> b, std::size_t k);

// ||x - ref|| / ||ref||. Reported as "MSE" in the result tables.
double mse_rel(std::span<const double> x, std::span<const double> ref);

inline constexpr double kPerfectPsnr = std::numeric_limits<double>::infinity();

// 10 log10(peak^2 / mean((x - ref)^2)); kPerfectPsnr when x == ref.
double psnr(std::span<const double> x, std::span<const double> ref, double peak = 1.0);

// Single-scale SSIM: Gaussian window (11x11, sigma 1.5), K1 = 0.01, K2 = 0.03, dynamic range 1,
// averaged over window positions fully inside the image. Images smaller than 11 pixels use
// the largest odd window that fits.
double ssim(const Image& x, const Image& ref);

// ||A_I x - b_I|| / ||b_I||.
double residual_err(std::span<const double> x, const LinearOperator& a_rows,
                    std::span<const double> b_part);

}  // namespace pnp
