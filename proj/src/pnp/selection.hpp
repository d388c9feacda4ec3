#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "image.hpp"
#include "linear_operator.hpp"
#include "tomo_model.hpp"

namespace pnp {

// Relative residual of x on the held-out measurements (the S-err column).
double cv_error(std::span<const double> x, const SparseOperator& op, const DataSplit& split,
                std::span<const double> b_noisy);

struct StopDecision {
  bool stop = false;
  std::size_t k = 0;  // 1-based index of the running argmin of the history
};

// Stop once the history has stayed above its running minimum for `patience` consecutive
// iterations, or once max_iter entries have been seen. The reported k is the argmin so far.
StopDecision should_stop(std::span<const double> history, std::size_t patience,
                         std::size_t max_iter);

struct AlphaSearch {
  std::size_t grid = 21;
};

// argmin over alpha in [0,1] of eval(alpha), where eval scores
// alpha * hx_learned + (1 - alpha) * hx_classical. Uniform grid, then golden-section
// refinement of the bracket around the best grid point. Ties go to the smaller alpha.
double select_alpha(const Image& hx_learned, const Image& hx_classical,
                    const std::function<double(double)>& eval, std::size_t grid = 21);

}  // namespace pnp
