#include "selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "diagnostics.hpp"
#include "error.hpp"

namespace pnp {

double cv_error(std::span<const double> x, const SparseOperator& op, const DataSplit& split,
                std::span<const double> b_noisy) {
  require(b_noisy.size() == op.rows(), ErrorCode::ShapeMismatch, "cv_error: data length mismatch");
  RowSubsetOperator val(op, split.validation_indices);
  return residual_err(x, val, gather(b_noisy, split.validation_indices));
}

StopDecision should_stop(std::span<const double> history, std::size_t patience,
                         std::size_t max_iter) {
  require(!history.empty(), ErrorCode::InvalidArgument, "should_stop: empty history");
  require(patience >= 1, ErrorCode::InvalidArgument, "should_stop: patience must be >= 1");
  std::size_t best = 0, above = 0;
  for (std::size_t i = 1; i < history.size(); ++i) {
    if (history[i] < history[best]) {
      best = i;
      above = 0;
    } else if (history[i] > history[best]) {
      ++above;
    } else {
      above = 0;
    }
  }
  return {above >= patience || history.size() >= max_iter, best + 1};
}

namespace {

// b is a strictly better score than a; near-equal values count as ties.
bool better(double b, double a) {
  return b < a - 1e-12 * std::max(1.0, std::abs(a));
}

}  // namespace

double select_alpha(const Image& hx_learned, const Image& hx_classical,
                    const std::function<double(double)>& eval, std::size_t grid) {
  require(grid >= 2, ErrorCode::InvalidArgument, "select_alpha: grid must have >= 2 points");
  require(hx_learned.same_shape(hx_classical), ErrorCode::ShapeMismatch,
          "select_alpha: denoiser outputs differ in shape");
  const double inf = std::numeric_limits<double>::infinity();
  auto score = [&](double a) {
    const double s = eval(a);
    return std::isfinite(s) ? s : inf;
  };

  std::vector<double> vals(grid);
  std::size_t best = grid;
  for (std::size_t i = 0; i < grid; ++i) {
    vals[i] = score(double(i) / double(grid - 1));
    if (vals[i] < inf && (best == grid || better(vals[i], vals[best]))) best = i;
  }
  require(best < grid, ErrorCode::Runtime, "select_alpha: every candidate scored non-finite");

  const double h = 1.0 / double(grid - 1);
  double lo = best == 0 ? 0.0 : double(best - 1) * h;
  double hi = best + 1 == grid ? 1.0 : double(best + 1) * h;
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - ratio * (hi - lo), x2 = lo + ratio * (hi - lo);
  double f1 = score(x1), f2 = score(x2);
  for (int it = 0; it < 60 && hi - lo > 1e-9; ++it) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - ratio * (hi - lo);
      f1 = score(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + ratio * (hi - lo);
      f2 = score(x2);
    }
  }
  const double refined = f1 <= f2 ? x1 : x2;
  const double f_ref = std::min(f1, f2);
  double alpha = double(best) * h;
  if (better(f_ref, vals[best])) alpha = refined;
  return std::clamp(alpha, 0.0, 1.0);
}

}  // namespace pnp
