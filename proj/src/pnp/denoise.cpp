#include "denoise.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "error.hpp"

namespace pnp {

namespace {

void check_alpha(double alpha, const char* what) {
  require(std::isfinite(alpha) && alpha >= 0.0 && alpha <= 1.0, ErrorCode::InvalidArgument,
          std::string(what) + ": alpha must lie in [0,1], got " + std::to_string(alpha));
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

DenoiserSpec DenoiserSpec::identity() { return DenoiserSpec(denoisers::Identity{}); }

DenoiserSpec DenoiserSpec::gaussian_blur(double sigma) {
  require(std::isfinite(sigma) && sigma >= 0.0, ErrorCode::InvalidArgument,
          "gaussian blur sigma must be >= 0");
  return DenoiserSpec(denoisers::GaussianBlur{sigma});
}

DenoiserSpec DenoiserSpec::median(std::size_t window) {
  require(window >= 1 && window % 2 == 1, ErrorCode::InvalidArgument,
          "median window must be odd and >= 1");
  return DenoiserSpec(denoisers::Median{window});
}

DenoiserSpec DenoiserSpec::soft_threshold(double t) {
  require(std::isfinite(t) && t >= 0.0, ErrorCode::InvalidArgument, "threshold must be >= 0");
  return DenoiserSpec(denoisers::SoftThreshold{t});
}

DenoiserSpec DenoiserSpec::quadratic_shrink(double gamma) {
  require(std::isfinite(gamma) && gamma >= 0.0, ErrorCode::InvalidArgument,
          "shrink gamma must be >= 0");
  return DenoiserSpec(denoisers::QuadraticShrink{gamma});
}

DenoiserSpec DenoiserSpec::patch_collaborative(PatchParams p) {
  p.validate();
  return DenoiserSpec(denoisers::PatchCollaborative{p});
}

DenoiserSpec DenoiserSpec::cnn_residual(std::shared_ptr<const CnnWeights> w) {
  require(w != nullptr, ErrorCode::InvalidArgument, "cnn denoiser needs weights");
  w->validate();
  return DenoiserSpec(denoisers::CnnResidual{std::move(w)});
}

DenoiserSpec DenoiserSpec::attenuated(DenoiserSpec inner, double alpha) {
  check_alpha(alpha, "attenuated");
  return DenoiserSpec(
      denoisers::Attenuated{std::make_shared<const DenoiserSpec>(std::move(inner)), alpha});
}

DenoiserSpec DenoiserSpec::combined(DenoiserSpec a, DenoiserSpec b, double alpha) {
  check_alpha(alpha, "combined");
  return DenoiserSpec(denoisers::Combined{std::make_shared<const DenoiserSpec>(std::move(a)),
                                          std::make_shared<const DenoiserSpec>(std::move(b)),
                                          alpha});
}

DenoiserSpec DenoiserSpec::custom(std::function<Image(const Image&)> fn, std::string name) {
  require(bool(fn), ErrorCode::InvalidArgument, "custom denoiser needs a callable");
  return DenoiserSpec(denoisers::Custom{std::move(fn), std::move(name)});
}

std::string DenoiserSpec::describe() const {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const denoisers::Identity&) { os << "identity"; },
                 [&](const denoisers::GaussianBlur& d) { os << "gaussian(" << d.sigma << ")"; },
                 [&](const denoisers::Median& d) { os << "median(" << d.window << ")"; },
                 [&](const denoisers::SoftThreshold& d) { os << "soft(" << d.t << ")"; },
                 [&](const denoisers::QuadraticShrink& d) { os << "shrink(" << d.gamma << ")"; },
                 [&](const denoisers::PatchCollaborative& d) {
                   os << "patch(thr=" << d.params.hard_threshold << ")";
                 },
                 [&](const denoisers::CnnResidual& d) {
                   os << "cnn(" << d.weights->layers.size() << " layers)";
                 },
                 [&](const denoisers::Attenuated& d) {
                   os << "attenuated(" << d.inner->describe() << ", " << d.alpha << ")";
                 },
                 [&](const denoisers::Combined& d) {
                   os << "combined(" << d.a->describe() << ", " << d.b->describe() << ", "
                      << d.alpha << ")";
                 },
                 [&](const denoisers::Custom& d) { os << d.name; },
             },
             node_);
  return os.str();
}

Image DenoiserSpec::operator()(const Image& x) const {
  require(all_finite(x.values()), ErrorCode::NonFinite, "denoiser input is not finite");
  return std::visit(
      overloaded{
          [&](const denoisers::Identity&) { return x; },
          [&](const denoisers::GaussianBlur& d) { return pnp::gaussian_blur(x, d.sigma); },
          [&](const denoisers::Median& d) { return median_filter(x, d.window); },
          [&](const denoisers::SoftThreshold& d) { return pnp::soft_threshold(x, d.t); },
          [&](const denoisers::QuadraticShrink& d) { return pnp::quadratic_shrink(x, d.gamma); },
          [&](const denoisers::PatchCollaborative& d) {
            return pnp::patch_collaborative(x, d.params);
          },
          [&](const denoisers::CnnResidual& d) { return cnn_forward(*d.weights, x); },
          [&](const denoisers::Attenuated& d) {
            if (d.alpha == 0.0) return x;
            Image h = (*d.inner)(x);
            if (d.alpha == 1.0) return h;
            for (std::size_t i = 0; i < h.size(); ++i)
              h.vec()[i] = x.vec()[i] + d.alpha * (h.vec()[i] - x.vec()[i]);
            return h;
          },
          [&](const denoisers::Combined& d) {
            if (d.alpha == 1.0) return (*d.a)(x);
            if (d.alpha == 0.0) return (*d.b)(x);
            Image ha = (*d.a)(x);
            const Image hb = (*d.b)(x);
            for (std::size_t i = 0; i < ha.size(); ++i)
              ha.vec()[i] = d.alpha * ha.vec()[i] + (1.0 - d.alpha) * hb.vec()[i];
            return ha;
          },
          [&](const denoisers::Custom& d) {
            Image out = d.fn(x);
            require(out.same_shape(x), ErrorCode::ShapeMismatch,
                    "custom denoiser changed the image shape");
            return out;
          },
      },
      node_);
}

Image gaussian_blur(const Image& x, double sigma) {
  if (sigma == 0.0) return x;
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> w(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
    const double v = std::exp(-double(i * i) / (2.0 * sigma * sigma));
    w[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (auto& v : w) v /= sum;

  const auto W = static_cast<std::ptrdiff_t>(x.width()), H = static_cast<std::ptrdiff_t>(x.height());
  auto clampi = [](std::ptrdiff_t v, std::ptrdiff_t n) { return std::clamp<std::ptrdiff_t>(v, 0, n - 1); };
  Image tmp(x.width(), x.height()), out(x.width(), x.height());
  for (std::ptrdiff_t r = 0; r < H; ++r)
    for (std::ptrdiff_t c = 0; c < W; ++c) {
      double s = 0.0;
      for (std::ptrdiff_t i = -radius; i <= radius; ++i)
        s += w[static_cast<std::size_t>(i + radius)] *
             x.at(static_cast<std::size_t>(r), static_cast<std::size_t>(clampi(c + i, W)));
      tmp.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = s;
    }
  for (std::ptrdiff_t r = 0; r < H; ++r)
    for (std::ptrdiff_t c = 0; c < W; ++c) {
      double s = 0.0;
      for (std::ptrdiff_t i = -radius; i <= radius; ++i)
        s += w[static_cast<std::size_t>(i + radius)] *
             tmp.at(static_cast<std::size_t>(clampi(r + i, H)), static_cast<std::size_t>(c));
      out.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = s;
    }
  return out;
}

Image median_filter(const Image& x, std::size_t window) {
  require(window % 2 == 1, ErrorCode::InvalidArgument, "median window must be odd");
  const auto half = static_cast<std::ptrdiff_t>(window / 2);
  const auto W = static_cast<std::ptrdiff_t>(x.width()), H = static_cast<std::ptrdiff_t>(x.height());
  Image out(x.width(), x.height());
  std::vector<double> buf;
  buf.reserve(window * window);
  for (std::ptrdiff_t r = 0; r < H; ++r)
    for (std::ptrdiff_t c = 0; c < W; ++c) {
      buf.clear();
      for (std::ptrdiff_t dr = -half; dr <= half; ++dr)
        for (std::ptrdiff_t dc = -half; dc <= half; ++dc)
          buf.push_back(x.at(static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(r + dr, 0, H - 1)),
                             static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(c + dc, 0, W - 1))));
      auto mid = buf.begin() + static_cast<std::ptrdiff_t>(buf.size() / 2);
      std::nth_element(buf.begin(), mid, buf.end());
      out.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = *mid;
    }
  return out;
}

Image soft_threshold(const Image& x, double t) {
  Image out = x;
  for (auto& v : out.vec()) v = std::copysign(std::max(std::abs(v) - t, 0.0), v);
  return out;
}

Image quadratic_shrink(const Image& x, double gamma) {
  Image out = x;
  for (auto& v : out.vec()) v /= (1.0 + gamma);
  return out;
}

}  // namespace pnp
