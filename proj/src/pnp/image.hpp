#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace pnp {

using Vector = std::vector<double>;

// Row-major real image. Pixel (r, c) lives at data[r * width + c].
class Image {
 public:
  Image() = default;
  Image(std::size_t width, std::size_t height, double fill = 0.0);
  Image(std::size_t width, std::size_t height, Vector data);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool same_shape(const Image& o) const noexcept {
    return width_ == o.width_ && height_ == o.height_;
  }

  double& at(std::size_t r, std::size_t c) { return data_[r * width_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * width_ + c]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  Vector& vec() noexcept { return data_; }
  const Vector& vec() const noexcept { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  Vector data_;
};

// Measurement vector laid out angle-major: data[angle * rays_per_angle + ray].
class Sinogram {
 public:
  Sinogram() = default;
  Sinogram(std::size_t rays_per_angle, std::size_t num_angles, double fill = 0.0);
  Sinogram(std::size_t rays_per_angle, std::size_t num_angles, Vector data);

  std::size_t rays_per_angle() const noexcept { return rays_; }
  std::size_t num_angles() const noexcept { return angles_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  Vector& vec() noexcept { return data_; }
  const Vector& vec() const noexcept { return data_; }

  friend bool operator==(const Sinogram&, const Sinogram&) = default;

 private:
  std::size_t rays_ = 0;
  std::size_t angles_ = 0;
  Vector data_;
};

bool all_finite(std::span<const double> v) noexcept;

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);
// a - b
Vector sub(std::span<const double> a, std::span<const double> b);

// 16-bit binary PGM; [0,1] maps linearly onto [0,65535], values outside are clipped.
void write_pgm(const Image& img, const std::string& path);
Image read_pgm(const std::string& path);

// Flat little-endian float64 payload at `path` plus a JSON sidecar at `path + ".json"`.
void write_raw(const Image& img, const std::string& path);
Image read_raw_image(const std::string& path);
void write_raw(const Sinogram& s, const std::string& path);
Sinogram read_raw_sinogram(const std::string& path);

}  // namespace pnp
