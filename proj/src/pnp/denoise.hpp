#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "image.hpp"

namespace pnp {

// Block-matching collaborative hard-thresholding filter parameters.
struct PatchParams {
  std::size_t patch = 8;
  std::size_t search_window = 16;  // candidate offsets span [-window/2, window/2] per axis
  std::size_t max_group = 16;
  std::size_t step = 3;            // stride between reference patches
  double hard_threshold = 0.0;
  double match_threshold = 0.0384; // mean squared patch distance, intensities in [0,1]

  void validate() const;
};

// Classical weak denoiser: hard threshold 2.7 sigma.
PatchParams weak_classical_params(double sigma);

enum class Activation : std::uint32_t { None = 0, Relu = 1 };

struct CnnLayer {
  std::size_t out_ch = 0, in_ch = 0, kernel_h = 3, kernel_w = 3;
  std::vector<double> kernels;  // [out_ch][in_ch][kernel_h][kernel_w]
  std::vector<double> bias;     // [out_ch]
  Activation activation = Activation::None;

  double& k(std::size_t o, std::size_t i, std::size_t dy, std::size_t dx) {
    return kernels[((o * in_ch + i) * kernel_h + dy) * kernel_w + dx];
  }
  double k(std::size_t o, std::size_t i, std::size_t dy, std::size_t dx) const {
    return kernels[((o * in_ch + i) * kernel_h + dy) * kernel_w + dx];
  }
  friend bool operator==(const CnnLayer&, const CnnLayer&) = default;
};

struct CnnWeights {
  std::vector<CnnLayer> layers;
  bool residual = true;  // output = x - net(x)

  void validate() const;
  friend bool operator==(const CnnWeights&, const CnnWeights&) = default;
};

inline constexpr std::uint32_t kCnnFormatVersion = 1;

CnnWeights load_cnn_weights(const std::string& path);
void save_cnn_weights(const CnnWeights& w, const std::string& path);

class DenoiserSpec;

namespace denoisers {
struct Identity {};
struct GaussianBlur { double sigma; };
struct Median { std::size_t window; };
struct SoftThreshold { double t; };
struct QuadraticShrink { double gamma; };
struct PatchCollaborative { PatchParams params; };
struct CnnResidual { std::shared_ptr<const CnnWeights> weights; };
struct Attenuated { std::shared_ptr<const DenoiserSpec> inner; double alpha; };
struct Combined { std::shared_ptr<const DenoiserSpec> a, b; double alpha; };
// Any user-supplied image-to-image map.
struct Custom {
  std::function<Image(const Image&)> fn;
  std::string name;
};
}  // namespace denoisers

// Immutable denoiser tree: leaf denoisers plus attenuation / convex-combination wrappers.
class DenoiserSpec {
 public:
  using Node = std::variant<denoisers::Identity, denoisers::GaussianBlur, denoisers::Median,
                            denoisers::SoftThreshold, denoisers::QuadraticShrink,
                            denoisers::PatchCollaborative, denoisers::CnnResidual,
                            denoisers::Attenuated, denoisers::Combined, denoisers::Custom>;

  DenoiserSpec() : node_(denoisers::Identity{}) {}

  static DenoiserSpec identity();
  static DenoiserSpec gaussian_blur(double sigma);
  static DenoiserSpec median(std::size_t window);
  static DenoiserSpec soft_threshold(double t);
  static DenoiserSpec quadratic_shrink(double gamma);
  static DenoiserSpec patch_collaborative(PatchParams p);
  static DenoiserSpec cnn_residual(std::shared_ptr<const CnnWeights> w);
  // (1 - alpha) x + alpha inner(x)
  static DenoiserSpec attenuated(DenoiserSpec inner, double alpha);
  // alpha a(x) + (1 - alpha) b(x)
  static DenoiserSpec combined(DenoiserSpec a, DenoiserSpec b, double alpha);
  static DenoiserSpec custom(std::function<Image(const Image&)> fn, std::string name);

  const Node& node() const noexcept { return node_; }
  std::string describe() const;

  Image operator()(const Image& x) const;

 private:
  explicit DenoiserSpec(Node n) : node_(std::move(n)) {}
  Node node_;
};

inline Image denoise(const DenoiserSpec& spec, const Image& x) { return spec(x); }

// Leaf primitives, usable directly.
Image gaussian_blur(const Image& x, double sigma);
Image median_filter(const Image& x, std::size_t window);
Image soft_threshold(const Image& x, double t);
Image quadratic_shrink(const Image& x, double gamma);
Image patch_collaborative(const Image& x, const PatchParams& p);
Image cnn_forward(const CnnWeights& w, const Image& x);

}  // namespace pnp
