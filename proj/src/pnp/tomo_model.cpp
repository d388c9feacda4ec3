#include "tomo_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <utility>

#include "error.hpp"

namespace pnp {

namespace {

struct Ellipse {
  double intensity, semi_x, semi_y, cx, cy, angle_deg;
};

constexpr std::array<Ellipse, 10> kModifiedSheppLogan{{
    {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
    {-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0},
    {-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0},
    {-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0},
    {0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0},
    {0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0},
    {0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0},
    {0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0},
    {0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0},
    {0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0},
}};

}  // namespace

Image shepp_logan(std::size_t n) {
  require(n >= 16, ErrorCode::InvalidArgument, "phantom size must be at least 16");
  Image img(n, n);
  const double nn = static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    const double y = 1.0 - (2.0 * r + 1.0) / nn;
    for (std::size_t c = 0; c < n; ++c) {
      const double x = (2.0 * c + 1.0) / nn - 1.0;
      double v = 0.0;
      for (const auto& e : kModifiedSheppLogan) {
        const double phi = e.angle_deg * std::numbers::pi / 180.0;
        const double dx = x - e.cx, dy = y - e.cy;
        const double u = dx * std::cos(phi) + dy * std::sin(phi);
        const double w = -dx * std::sin(phi) + dy * std::cos(phi);
        if ((u * u) / (e.semi_x * e.semi_x) + (w * w) / (e.semi_y * e.semi_y) <= 1.0)
          v += e.intensity;
      }
      img.at(r, c) = std::clamp(v, 0.0, 1.0);
    }
  }
  return img;
}

FanBeamGeometry FanBeamGeometry::with_defaults(std::size_t image_size, std::size_t num_angles,
                                               std::size_t rays_per_angle) {
  FanBeamGeometry g;
  const double n = static_cast<double>(image_size);
  g.image_size = image_size;
  g.num_angles = num_angles;
  g.rays_per_angle =
      rays_per_angle ? rays_per_angle : static_cast<std::size_t>(std::lround(std::sqrt(2.0) * n));
  g.source_distance = 2.0 * n;
  g.detector_width = std::sqrt(2.0) * n;
  return g;
}

void FanBeamGeometry::validate() const {
  require(image_size >= 1, ErrorCode::InvalidArgument, "image_size must be >= 1");
  require(num_angles >= 1, ErrorCode::InvalidArgument, "num_angles must be >= 1");
  require(rays_per_angle >= 1, ErrorCode::InvalidArgument, "rays_per_angle must be >= 1");
  const double half_diag = static_cast<double>(image_size) / std::sqrt(2.0);
  require(source_distance > half_diag, ErrorCode::InvalidArgument,
          "source_distance must exceed half the image diagonal");
  require(detector_width > 0.0 && detector_width < 2.0 * source_distance,
          ErrorCode::InvalidArgument, "detector_width must lie in (0, 2*source_distance)");
}

namespace {

// Appends the pixel intersections of the ray S + t*u, t in [0, t_end], to (cols, vals).
void trace_ray(double sx, double sy, double ux, double uy, double t_end, std::size_t n,
               std::vector<std::pair<std::uint32_t, double>>& hits) {
  const double half = 0.5 * static_cast<double>(n);
  double t_lo = 0.0, t_hi = t_end;
  auto slab = [&](double s, double u) {
    if (std::abs(u) < 1e-15) return s >= -half && s <= half;
    double a = (-half - s) / u, b = (half - s) / u;
    if (a > b) std::swap(a, b);
    t_lo = std::max(t_lo, a);
    t_hi = std::min(t_hi, b);
    return t_lo < t_hi;
  };
  if (!slab(sx, ux) || !slab(sy, uy)) return;

  std::vector<double> ts;
  ts.reserve(2 * n + 4);
  ts.push_back(t_lo);
  ts.push_back(t_hi);
  auto add_planes = [&](double s, double u) {
    if (std::abs(u) < 1e-15) return;
    for (std::size_t i = 0; i <= n; ++i) {
      const double t = (static_cast<double>(i) - half - s) / u;
      if (t > t_lo && t < t_hi) ts.push_back(t);
    }
  };
  add_planes(sx, ux);
  add_planes(sy, uy);
  std::sort(ts.begin(), ts.end());

  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    const double len = ts[i + 1] - ts[i];
    if (len <= 1e-12) continue;
    const double tm = 0.5 * (ts[i] + ts[i + 1]);
    const double mx = sx + tm * ux, my = sy + tm * uy;
    const auto clampi = [n](double v) {
      return static_cast<std::size_t>(std::clamp(std::floor(v), 0.0, static_cast<double>(n - 1)));
    };
    const std::size_t col = clampi(mx + half);
    const std::size_t row = n - 1 - clampi(my + half);
    hits.emplace_back(static_cast<std::uint32_t>(row * n + col), len);
  }
}

}  // namespace

ForwardOperator build_operator(const FanBeamGeometry& g) {
  g.validate();
  const std::size_t n = g.image_size;
  CsrMatrix m;
  m.rows = g.num_angles * g.rays_per_angle;
  m.cols = n * n;
  m.row_ptr.reserve(m.rows + 1);

  const double gamma_max = std::asin(0.5 * g.detector_width / g.source_distance);
  const double t_end = 2.0 * g.source_distance;
  std::vector<std::pair<std::uint32_t, double>> hits;
  for (std::size_t a = 0; a < g.num_angles; ++a) {
    const double beta = 2.0 * std::numbers::pi * static_cast<double>(a) /
                        static_cast<double>(g.num_angles);
    const double sx = g.source_distance * std::cos(beta);
    const double sy = g.source_distance * std::sin(beta);
    for (std::size_t j = 0; j < g.rays_per_angle; ++j) {
      const double frac = (2.0 * static_cast<double>(j) + 1.0) /
                          static_cast<double>(g.rays_per_angle) - 1.0;
      const double gamma = gamma_max * frac;
      // central direction is -(cos beta, sin beta), rotated by the fan angle
      const double ux = -std::cos(beta + gamma);
      const double uy = -std::sin(beta + gamma);
      hits.clear();
      trace_ray(sx, sy, ux, uy, t_end, n, hits);
      std::sort(hits.begin(), hits.end());
      for (std::size_t k = 0; k < hits.size();) {
        const auto c = hits[k].first;
        double len = 0.0;
        for (; k < hits.size() && hits[k].first == c; ++k) len += hits[k].second;
        m.col.push_back(c);
        m.val.push_back(len);
      }
      m.row_ptr.push_back(m.val.size());
    }
  }
  return ForwardOperator(g, std::move(m));
}

Sinogram apply(const ForwardOperator& op, const Image& x) {
  const auto& g = op.geometry();
  require(x.width() == g.image_size && x.height() == g.image_size, ErrorCode::ShapeMismatch,
          "image shape does not match operator geometry");
  Sinogram s(g.rays_per_angle, g.num_angles);
  op.apply(x.values(), s.values());
  return s;
}

Image apply_adjoint(const ForwardOperator& op, const Sinogram& s) {
  const auto& g = op.geometry();
  require(s.rays_per_angle() == g.rays_per_angle && s.num_angles() == g.num_angles,
          ErrorCode::ShapeMismatch, "sinogram shape does not match operator geometry");
  Image x(g.image_size, g.image_size);
  op.apply_adjoint(s.values(), x.values());
  return x;
}

Sinogram add_noise(const Sinogram& b, double relative_level, std::uint64_t seed) {
  require(relative_level >= 0.0 && std::isfinite(relative_level), ErrorCode::InvalidArgument,
          "noise level must be finite and >= 0");
  if (relative_level == 0.0) return b;
  const double nb = norm2(b.values());
  require(nb > 0.0, ErrorCode::InvalidArgument, "cannot scale relative noise on zero data");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector e(b.size());
  for (auto& v : e) v = normal(rng);
  const double scale = relative_level * nb / norm2(e);
  Sinogram out = b;
  axpy(scale, e, out.values());
  return out;
}

DataSplit split_validation(std::size_t m, double fraction, std::uint64_t seed) {
  require(fraction > 0.0 && fraction < 1.0, ErrorCode::InvalidArgument,
          "validation fraction must lie in (0,1)");
  require(m >= 2, ErrorCode::InvalidArgument, "need at least two measurements to split");
  const auto count = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(m))), 1, m - 1);
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // partial Fisher-Yates: the first `count` slots become the validation set
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, m - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  DataSplit s;
  s.fraction = fraction;
  s.validation_indices.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(count));
  s.fit_indices.assign(idx.begin() + static_cast<std::ptrdiff_t>(count), idx.end());
  std::sort(s.validation_indices.begin(), s.validation_indices.end());
  std::sort(s.fit_indices.begin(), s.fit_indices.end());
  return s;
}

}  // namespace pnp
