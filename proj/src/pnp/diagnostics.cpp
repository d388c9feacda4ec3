#include "diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace pnp {

double data_misfit(const LinearOperator& a, std::span<const double> b, std::span<const double> x) {
  Vector r = a.apply(x);
  axpy(-1.0, b, r);
  return dot(r, r);
}

Vector misfit_gradient(const LinearOperator& a, std::span<const double> b,
                       std::span<const double> x) {
  Vector r = a.apply(x);
  axpy(-1.0, b, r);
  Vector g = a.apply_adjoint(r);
  for (auto& v : g) v *= 2.0;
  return g;
}

double dc_ratio(std::span<const double> x_k, std::span<const double> x_prev,
                std::span<const double> z_k) {
  const double den = norm2(sub(x_k, x_prev));
  require(den > 0.0, ErrorCode::StalledConsistency,
          "consistency step has zero length; denoising ratio undefined");
  return norm2(sub(z_k, x_k)) / den;
}

double descent_inner(std::span<const double> d, std::span<const double> x,
                     const LinearOperator& a, std::span<const double> b) {
  return -dot(d, misfit_gradient(a, b, x));
}

bool sufficient_check(std::span<const double> x_k, std::span<const double> z_k,
                      std::span<const double> grad_step) {
  return norm2(sub(z_k, x_k)) < norm2(grad_step);
}

void DescentConfig::validate() const {
  require(eps1 >= 0.0 && eps1 <= eps2, ErrorCode::InvalidArgument,
          "descent thresholds need 0 <= eps1 <= eps2");
}

DescentRegime classify_descent(double inner, double misfit,
                               const std::function<double()>& misfit_after,
                               const DescentConfig& cfg, std::size_t k) {
  const bool strict = misfit > cfg.eps2 || (cfg.k_cap && k <= *cfg.k_cap);
  if (strict) return inner > 0.0 ? DescentRegime::StrictDescent : DescentRegime::Violated;
  return misfit_after() >= cfg.eps1 ? DescentRegime::FloorRegime : DescentRegime::Violated;
}

DescentRegime generalized_descent_ok(std::span<const double> d, std::span<const double> x,
                                     const DescentConfig& cfg, const LinearOperator& a,
                                     std::span<const double> b, std::size_t k) {
  cfg.validate();
  return classify_descent(
      descent_inner(d, x, a, b), data_misfit(a, b, x),
      [&] {
        Vector moved(x.begin(), x.end());
        axpy(1.0, d, moved);
        return data_misfit(a, b, moved);
      },
      cfg, k);
}

double mse_rel(std::span<const double> x, std::span<const double> ref) {
  const double nr = norm2(ref);
  require(nr > 0.0, ErrorCode::InvalidArgument, "relative error against a zero reference");
  return norm2(sub(x, ref)) / nr;
}

double psnr(std::span<const double> x, std::span<const double> ref, double peak) {
  require(x.size() == ref.size() && !x.empty(), ErrorCode::ShapeMismatch, "psnr: shape mismatch");
  double se = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) se += (x[i] - ref[i]) * (x[i] - ref[i]);
  if (se == 0.0) return kPerfectPsnr;
  return 10.0 * std::log10(peak * peak / (se / static_cast<double>(x.size())));
}

namespace {

Vector gaussian_window(std::size_t size, double sigma) {
  Vector w(size);
  const double c = 0.5 * static_cast<double>(size - 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    const double d = static_cast<double>(i) - c;
    w[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += w[i];
  }
  for (auto& v : w) v /= sum;
  return w;
}

// Separable "valid" correlation of a row-major image with w (x) w.
Vector filter_valid(std::span<const double> img, std::size_t width, std::size_t height,
                    const Vector& w) {
  const std::size_t k = w.size(), ow = width - k + 1, oh = height - k + 1;
  Vector tmp(height * ow), out(oh * ow);
  for (std::size_t r = 0; r < height; ++r)
    for (std::size_t c = 0; c < ow; ++c) {
      double s = 0.0;
      for (std::size_t i = 0; i < k; ++i) s += w[i] * img[r * width + c + i];
      tmp[r * ow + c] = s;
    }
  for (std::size_t r = 0; r < oh; ++r)
    for (std::size_t c = 0; c < ow; ++c) {
      double s = 0.0;
      for (std::size_t i = 0; i < k; ++i) s += w[i] * tmp[(r + i) * ow + c];
      out[r * ow + c] = s;
    }
  return out;
}

}  // namespace

double ssim(const Image& x, const Image& ref) {
  require(x.same_shape(ref) && x.size() > 0, ErrorCode::ShapeMismatch, "ssim: shape mismatch");
  std::size_t win = std::min<std::size_t>({11, x.width(), x.height()});
  if (win % 2 == 0) --win;
  const Vector w = gaussian_window(win, 1.5);
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;

  const std::size_t n = x.size();
  Vector xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = x.vec()[i], b = ref.vec()[i];
    xx[i] = a * a;
    yy[i] = b * b;
    xy[i] = a * b;
  }
  const auto mx = filter_valid(x.vec(), x.width(), x.height(), w);
  const auto my = filter_valid(ref.vec(), x.width(), x.height(), w);
  const auto sxx = filter_valid(xx, x.width(), x.height(), w);
  const auto syy = filter_valid(yy, x.width(), x.height(), w);
  const auto sxy = filter_valid(xy, x.width(), x.height(), w);

  double total = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = sxx[i] - mx[i] * mx[i];
    const double vy = syy[i] - my[i] * my[i];
    const double cov = sxy[i] - mx[i] * my[i];
    total += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(mx.size());
}

double residual_err(std::span<const double> x, const LinearOperator& a_rows,
                    std::span<const double> b_part) {
  const double nb = norm2(b_part);
  require(nb > 0.0, ErrorCode::InvalidArgument, "residual relative to zero data");
  Vector r = a_rows.apply(x);
  axpy(-1.0, b_part, r);
  return norm2(r) / nb;
}

}  // namespace pnp
