// Single-stage block-matching collaborative filter: group similar patches, transform each
// group with a separable orthonormal DCT-II (2-D within patches, 1-D across the stack),
// hard-threshold, invert, and average the overlapping estimates with uniform weights.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

#include "denoise.hpp"
#include "error.hpp"

namespace pnp {

void PatchParams::validate() const {
  require(patch >= 1 && patch <= search_window, ErrorCode::InvalidArgument,
          "patch size must lie in [1, search_window]");
  require(max_group >= 1, ErrorCode::InvalidArgument, "max_group must be >= 1");
  require(step >= 1, ErrorCode::InvalidArgument, "step must be >= 1");
  require(std::isfinite(hard_threshold) && hard_threshold >= 0.0, ErrorCode::InvalidArgument,
          "hard_threshold must be >= 0");
  require(std::isfinite(match_threshold) && match_threshold >= 0.0, ErrorCode::InvalidArgument,
          "match_threshold must be >= 0");
}

PatchParams weak_classical_params(double sigma) {
  PatchParams p;
  p.hard_threshold = 2.7 * sigma;
  return p;
}

namespace {

// Row k holds the k-th orthonormal DCT-II basis vector of length n.
std::vector<double> dct_matrix(std::size_t n) {
  std::vector<double> m(n * n);
  for (std::size_t k = 0; k < n; ++k) {
    const double s = k == 0 ? std::sqrt(1.0 / double(n)) : std::sqrt(2.0 / double(n));
    for (std::size_t i = 0; i < n; ++i)
      m[k * n + i] = s * std::cos(std::numbers::pi * (2.0 * double(i) + 1.0) * double(k) /
                                  (2.0 * double(n)));
  }
  return m;
}

// In-place transform of `len` values spaced by `stride`: forward y = M v, inverse v = M^T y.
void transform_line(const std::vector<double>& m, std::size_t len, double* v, std::size_t stride,
                    bool inverse, std::vector<double>& scratch) {
  scratch.assign(len, 0.0);
  for (std::size_t k = 0; k < len; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < len; ++i)
      s += (inverse ? m[i * len + k] : m[k * len + i]) * v[i * stride];
    scratch[k] = s;
  }
  for (std::size_t k = 0; k < len; ++k) v[k * stride] = scratch[k];
}

std::vector<std::size_t> grid_positions(std::size_t extent, std::size_t patch, std::size_t step) {
  std::vector<std::size_t> pos;
  const std::size_t last = extent - patch;
  for (std::size_t p = 0; p < last; p += step) pos.push_back(p);
  pos.push_back(last);
  return pos;
}

}  // namespace

Image patch_collaborative(const Image& x, const PatchParams& p) {
  p.validate();
  const std::size_t W = x.width(), H = x.height(), P = p.patch, PP = P * P;
  require(W >= P && H >= P, ErrorCode::InvalidArgument, "image smaller than patch size");

  const auto patch_dct = dct_matrix(P);
  std::vector<std::vector<double>> group_dct(p.max_group + 1);
  std::vector<double> acc(x.size(), 0.0), wsum(x.size(), 0.0);
  std::vector<double> stack, scratch;
  std::vector<std::tuple<double, std::size_t, std::size_t>> cands;

  const auto rows = grid_positions(H, P, p.step), cols = grid_positions(W, P, p.step);
  const std::size_t half = p.search_window / 2;

  for (std::size_t r0 : rows)
    for (std::size_t c0 : cols) {
      cands.clear();
      const std::size_t rlo = r0 > half ? r0 - half : 0, rhi = std::min(H - P, r0 + half);
      const std::size_t clo = c0 > half ? c0 - half : 0, chi = std::min(W - P, c0 + half);
      for (std::size_t r = rlo; r <= rhi; ++r)
        for (std::size_t c = clo; c <= chi; ++c) {
          if (r == r0 && c == c0) continue;
          double d = 0.0;
          for (std::size_t i = 0; i < P && d <= p.match_threshold * double(PP); ++i)
            for (std::size_t j = 0; j < P; ++j) {
              const double e = x.at(r0 + i, c0 + j) - x.at(r + i, c + j);
              d += e * e;
            }
          d /= double(PP);
          if (d <= p.match_threshold) cands.emplace_back(d, r, c);
        }
      // smallest distance first; ties go to the lowest (row, col)
      const std::size_t take = std::min(cands.size(), p.max_group - 1);
      std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(take),
                        cands.end());
      cands.resize(take);
      cands.insert(cands.begin(), {0.0, r0, c0});

      const std::size_t g = cands.size();
      stack.assign(g * PP, 0.0);
      for (std::size_t m = 0; m < g; ++m) {
        const auto [d, r, c] = cands[m];
        for (std::size_t i = 0; i < P; ++i)
          for (std::size_t j = 0; j < P; ++j) stack[m * PP + i * P + j] = x.at(r + i, c + j);
      }

      {
        if (group_dct[g].empty()) group_dct[g] = dct_matrix(g);
        for (std::size_t m = 0; m < g; ++m) {
          double* blk = &stack[m * PP];
          for (std::size_t i = 0; i < P; ++i) transform_line(patch_dct, P, blk + i * P, 1, false, scratch);
          for (std::size_t j = 0; j < P; ++j) transform_line(patch_dct, P, blk + j, P, false, scratch);
        }
        for (std::size_t e = 0; e < PP; ++e)
          transform_line(group_dct[g], g, &stack[e], PP, false, scratch);
        // the group DC coefficient (index 0) is always kept
        for (std::size_t e = 1; e < stack.size(); ++e)
          if (std::abs(stack[e]) < p.hard_threshold) stack[e] = 0.0;
        for (std::size_t e = 0; e < PP; ++e)
          transform_line(group_dct[g], g, &stack[e], PP, true, scratch);
        for (std::size_t m = 0; m < g; ++m) {
          double* blk = &stack[m * PP];
          for (std::size_t j = 0; j < P; ++j) transform_line(patch_dct, P, blk + j, P, true, scratch);
          for (std::size_t i = 0; i < P; ++i) transform_line(patch_dct, P, blk + i * P, 1, true, scratch);
        }
      }

      for (std::size_t m = 0; m < g; ++m) {
        const auto [d, r, c] = cands[m];
        for (std::size_t i = 0; i < P; ++i)
          for (std::size_t j = 0; j < P; ++j) {
            const std::size_t idx = (r + i) * W + (c + j);
            acc[idx] += stack[m * PP + i * P + j];
            wsum[idx] += 1.0;
          }
      }
    }

  Image out(W, H);
  for (std::size_t i = 0; i < out.size(); ++i) out.vec()[i] = acc[i] / wsum[i];
  return out;
}

}  // namespace pnp
