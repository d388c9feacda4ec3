#include "image.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "error.hpp"

namespace pnp {

Image::Image(std::size_t width, std::size_t height, double fill)
    : width_(width), height_(height), data_(width * height, fill) {}

Image::Image(std::size_t width, std::size_t height, Vector data)
    : width_(width), height_(height), data_(std::move(data)) {
  require(data_.size() == width_ * height_, ErrorCode::ShapeMismatch,
          "image data length does not match width*height");
}

Sinogram::Sinogram(std::size_t rays_per_angle, std::size_t num_angles, double fill)
    : rays_(rays_per_angle), angles_(num_angles), data_(rays_per_angle * num_angles, fill) {}

Sinogram::Sinogram(std::size_t rays_per_angle, std::size_t num_angles, Vector data)
    : rays_(rays_per_angle), angles_(num_angles), data_(std::move(data)) {
  require(data_.size() == rays_ * angles_, ErrorCode::ShapeMismatch,
          "sinogram data length does not match rays*angles");
}

bool all_finite(std::span<const double> v) noexcept {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorCode::ShapeMismatch, "dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void axpy(double a, std::span<const double> x, std::span<double> y) {
  require(x.size() == y.size(), ErrorCode::ShapeMismatch, "axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

Vector sub(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorCode::ShapeMismatch, "sub: length mismatch");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "RAW I/O assumes a little-endian host");

std::string read_token(std::istream& in) {
  std::string tok;
  while (in) {
    in >> std::ws;
    if (in.peek() == '#') {
      std::string skip;
      std::getline(in, skip);
      continue;
    }
    in >> tok;
    break;
  }
  return tok;
}

void write_doubles(const std::string& path, std::span<const double> v) {
  std::ofstream out(path, std::ios::binary);
  require(bool(out), ErrorCode::Io, "cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
  require(bool(out), ErrorCode::Io, "write failed: " + path);
}

Vector read_doubles(const std::string& path, std::size_t count) {
  std::ifstream in(path, std::ios::binary);
  require(bool(in), ErrorCode::Io, "cannot open " + path);
  Vector v(count);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(count * sizeof(double)));
  require(static_cast<std::size_t>(in.gcount()) == count * sizeof(double), ErrorCode::Format,
          "raw payload shorter than header declares: " + path);
  return v;
}

void write_sidecar(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path + ".json");
  require(bool(out), ErrorCode::Io, "cannot write sidecar for " + path);
  out << j.dump(2) << '\n';
}

nlohmann::json read_sidecar(const std::string& path, const std::string& kind) {
  std::ifstream in(path + ".json");
  require(bool(in), ErrorCode::Io, "missing sidecar " + path + ".json");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Format, "bad sidecar " + path + ".json: " + e.what());
  }
  require(j.value("kind", "") == kind && j.value("dtype", "") == "float64le", ErrorCode::Format,
          "sidecar does not describe a float64le " + kind);
  return j;
}

}  // namespace

void write_pgm(const Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(bool(out), ErrorCode::Io, "cannot open " + path + " for writing");
  out << "P5\n" << img.width() << ' ' << img.height() << "\n65535\n";
  std::vector<unsigned char> buf(img.size() * 2);
  for (std::size_t i = 0; i < img.size(); ++i) {
    double v = std::clamp(img.vec()[i], 0.0, 1.0);
    auto q = static_cast<std::uint16_t>(std::lround(v * 65535.0));
    buf[2 * i] = static_cast<unsigned char>(q >> 8);  // PGM is big-endian
    buf[2 * i + 1] = static_cast<unsigned char>(q & 0xff);
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  require(bool(out), ErrorCode::Io, "write failed: " + path);
}

Image read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(bool(in), ErrorCode::Io, "cannot open " + path);
  require(read_token(in) == "P5", ErrorCode::Format, "not a binary PGM: " + path);
  std::size_t w = 0, h = 0;
  unsigned long maxval = 0;
  try {
    w = std::stoul(read_token(in));
    h = std::stoul(read_token(in));
    maxval = std::stoul(read_token(in));
  } catch (const std::exception&) {
    fail(ErrorCode::Format, "malformed PGM header: " + path);
  }
  require(maxval > 0 && maxval <= 65535, ErrorCode::Format, "unsupported PGM maxval");
  in.get();
  const std::size_t bpp = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> buf(w * h * bpp);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  require(static_cast<std::size_t>(in.gcount()) == buf.size(), ErrorCode::Format,
          "truncated PGM: " + path);
  Image img(w, h);
  for (std::size_t i = 0; i < w * h; ++i) {
    unsigned q = bpp == 2 ? (unsigned(buf[2 * i]) << 8) | buf[2 * i + 1] : buf[i];
    img.vec()[i] = double(q) / double(maxval);
  }
  return img;
}

void write_raw(const Image& img, const std::string& path) {
  write_doubles(path, img.values());
  write_sidecar(path, {{"kind", "image"},
                       {"dtype", "float64le"},
                       {"width", img.width()},
                       {"height", img.height()},
                       {"layout", "row-major"}});
}

Image read_raw_image(const std::string& path) {
  auto j = read_sidecar(path, "image");
  std::size_t w = j.at("width"), h = j.at("height");
  return Image(w, h, read_doubles(path, w * h));
}

void write_raw(const Sinogram& s, const std::string& path) {
  write_doubles(path, s.values());
  write_sidecar(path, {{"kind", "sinogram"},
                       {"dtype", "float64le"},
                       {"rays_per_angle", s.rays_per_angle()},
                       {"num_angles", s.num_angles()},
                       {"layout", "angle-major"}});
}

Sinogram read_raw_sinogram(const std::string& path) {
  auto j = read_sidecar(path, "sinogram");
  std::size_t m1 = j.at("rays_per_angle"), m2 = j.at("num_angles");
  return Sinogram(m1, m2, read_doubles(path, m1 * m2));
}

}  // namespace pnp
