#include <cmath>
#include <cstring>
#include <fstream>

#include "denoise.hpp"
#include "error.hpp"

namespace pnp {

namespace {

constexpr char kMagic[8] = {'P', 'N', 'P', 'C', 'N', 'N', '\0', '\0'};

class Reader {
 public:
  Reader(std::ifstream& in, const std::string& path) : in_(in), path_(path) {}

  template <class T>
  T pod() {
    T v{};
    bytes(&v, sizeof(T));
    return v;
  }
  void doubles(std::vector<double>& v, std::size_t n) {
    v.resize(n);
    bytes(v.data(), n * sizeof(double));
  }
  void bytes(void* dst, std::size_t n) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    require(static_cast<std::size_t>(in_.gcount()) == n, ErrorCode::Format,
            "truncated weight file: " + path_);
  }

 private:
  std::ifstream& in_;
  const std::string& path_;
};

template <class T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

}  // namespace

void CnnWeights::validate() const {
  require(!layers.empty(), ErrorCode::InvalidArgument, "cnn has no layers");
  require(layers.front().in_ch == 1, ErrorCode::InvalidArgument, "first layer must take 1 channel");
  require(layers.back().out_ch == 1, ErrorCode::InvalidArgument, "last layer must emit 1 channel");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& L = layers[l];
    require(L.kernel_h == 3 && L.kernel_w == 3, ErrorCode::InvalidArgument,
            "cnn kernels must be 3x3");
    require(L.out_ch >= 1 && L.in_ch >= 1, ErrorCode::InvalidArgument, "empty cnn layer");
    require(l == 0 || L.in_ch == layers[l - 1].out_ch, ErrorCode::InvalidArgument,
            "cnn layer " + std::to_string(l) + " channel count does not chain");
    require(L.kernels.size() == L.out_ch * L.in_ch * 9 && L.bias.size() == L.out_ch,
            ErrorCode::InvalidArgument, "cnn layer " + std::to_string(l) + " tensor size mismatch");
    require(all_finite(L.kernels) && all_finite(L.bias), ErrorCode::InvalidArgument,
            "cnn weights must be finite");
  }
}

CnnWeights load_cnn_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(bool(in), ErrorCode::Io, "cannot open weight file " + path);
  Reader rd(in, path);
  char magic[8];
  rd.bytes(magic, 8);
  require(std::memcmp(magic, kMagic, 8) == 0, ErrorCode::Format, "bad magic in " + path);
  const auto version = rd.pod<std::uint32_t>();
  require(version == kCnnFormatVersion, ErrorCode::Format,
          "unsupported weight file version " + std::to_string(version));
  const auto count = rd.pod<std::uint32_t>();
  require(count >= 1 && count <= 1024, ErrorCode::Format, "implausible layer count");
  CnnWeights w;
  w.residual = rd.pod<std::uint8_t>() != 0;
  std::uint8_t reserved[3];
  rd.bytes(reserved, 3);
  w.layers.resize(count);
  for (auto& L : w.layers) {
    L.out_ch = rd.pod<std::uint32_t>();
    L.in_ch = rd.pod<std::uint32_t>();
    L.kernel_h = rd.pod<std::uint32_t>();
    L.kernel_w = rd.pod<std::uint32_t>();
    const auto act = rd.pod<std::uint32_t>();
    require(act <= 1, ErrorCode::Format, "unknown activation code");
    L.activation = static_cast<Activation>(act);
    const std::size_t nk = L.out_ch * L.in_ch * L.kernel_h * L.kernel_w;
    require(nk <= (std::size_t{1} << 28), ErrorCode::Format, "implausible layer size");
    rd.doubles(L.kernels, nk);
    rd.doubles(L.bias, L.out_ch);
  }
  try {
    w.validate();
  } catch (const Error& e) {
    fail(ErrorCode::Format, std::string("invalid weights in ") + path + ": " + e.what());
  }
  return w;
}

void save_cnn_weights(const CnnWeights& w, const std::string& path) {
  w.validate();
  std::ofstream out(path, std::ios::binary);
  require(bool(out), ErrorCode::Io, "cannot write weight file " + path);
  out.write(kMagic, 8);
  put<std::uint32_t>(out, kCnnFormatVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(w.layers.size()));
  put<std::uint8_t>(out, w.residual ? 1 : 0);
  const char reserved[3] = {0, 0, 0};
  out.write(reserved, 3);
  for (const auto& L : w.layers) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(L.out_ch));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(L.in_ch));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(L.kernel_h));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(L.kernel_w));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(L.activation));
    out.write(reinterpret_cast<const char*>(L.kernels.data()),
              static_cast<std::streamsize>(L.kernels.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(L.bias.data()),
              static_cast<std::streamsize>(L.bias.size() * sizeof(double)));
  }
  require(bool(out), ErrorCode::Io, "write failed: " + path);
}

namespace {

// Zero-padded 3x3 "same" cross-correlation of every input channel, summed per output channel.
std::vector<double> conv_layer(const CnnLayer& L, const std::vector<double>& in, std::size_t W,
                               std::size_t H) {
  const std::size_t n = W * H;
  std::vector<double> out(L.out_ch * n);
  for (std::size_t o = 0; o < L.out_ch; ++o) {
    double* dst = &out[o * n];
    std::fill(dst, dst + n, L.bias[o]);
    for (std::size_t i = 0; i < L.in_ch; ++i) {
      const double* src = &in[i * n];
      for (std::size_t dy = 0; dy < 3; ++dy)
        for (std::size_t dx = 0; dx < 3; ++dx) {
          const double k = L.k(o, i, dy, dx);
          if (k == 0.0) continue;
          // output (r, c) reads input (r + dy - 1, c + dx - 1)
          const std::size_t r_lo = dy == 0 ? 1 : 0, r_hi = dy == 2 ? H - 1 : H;
          const std::size_t c_lo = dx == 0 ? 1 : 0, c_hi = dx == 2 ? W - 1 : W;
          for (std::size_t r = r_lo; r < r_hi; ++r) {
            double* drow = dst + r * W;
            const double* srow = src + (r + dy - 1) * W + dx - 1;
            for (std::size_t c = c_lo; c < c_hi; ++c) drow[c] += k * srow[c];
          }
        }
    }
    if (L.activation == Activation::Relu)
      for (std::size_t j = 0; j < n; ++j) dst[j] = std::max(dst[j], 0.0);
  }
  return out;
}

}  // namespace

Image cnn_forward(const CnnWeights& w, const Image& x) {
  w.validate();
  std::vector<double> act = x.vec();
  for (const auto& L : w.layers) act = conv_layer(L, act, x.width(), x.height());
  Image out(x.width(), x.height(), std::move(act));
  if (w.residual)
    for (std::size_t i = 0; i < out.size(); ++i) out.vec()[i] = x.vec()[i] - out.vec()[i];
  return out;
}

}  // namespace pnp
