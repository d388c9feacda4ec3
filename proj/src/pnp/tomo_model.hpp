#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "image.hpp"
#include "linear_operator.hpp"

namespace pnp {

// Modified Shepp-Logan phantom on [-1,1]^2 sampled at pixel centres, clamped to [0,1].
Image shepp_logan(std::size_t n);

// Circular source trajectory with an equiangular (curved) detector.
// Lengths are in pixel units; the image occupies [-N/2, N/2]^2 around the rotation centre.
struct FanBeamGeometry {
  std::size_t image_size = 0;
  std::size_t num_angles = 0;      // evenly spread over 360 degrees
  std::size_t rays_per_angle = 0;
  double source_distance = 0.0;    // source to rotation centre
  double detector_width = 0.0;     // fan footprint across the rotation centre

  // source_distance = 2N, detector covering the circumscribed circle, round(sqrt(2) N) rays.
  static FanBeamGeometry with_defaults(std::size_t image_size, std::size_t num_angles,
                                       std::size_t rays_per_angle = 0);
  void validate() const;
};

class ForwardOperator final : public SparseOperator {
 public:
  ForwardOperator(FanBeamGeometry g, CsrMatrix m) : SparseOperator(std::move(m)), geom_(g) {}
  const FanBeamGeometry& geometry() const noexcept { return geom_; }

 private:
  FanBeamGeometry geom_;
};

// Siddon ray tracing: row i holds the intersection lengths of ray i with every pixel.
ForwardOperator build_operator(const FanBeamGeometry& g);

Sinogram apply(const ForwardOperator& op, const Image& x);
Image apply_adjoint(const ForwardOperator& op, const Sinogram& s);

// b + e with e Gaussian, rescaled so that ||e|| / ||b|| == relative_level.
Sinogram add_noise(const Sinogram& b, double relative_level, std::uint64_t seed);

struct DataSplit {
  std::vector<std::size_t> fit_indices;         // D-part, sorted
  std::vector<std::size_t> validation_indices;  // S-part, sorted
  double fraction = 0.0;
};

DataSplit split_validation(std::size_t m, double fraction, std::uint64_t seed);

}  // namespace pnp
