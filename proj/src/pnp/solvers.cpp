#include "solvers.hpp"

#include <cmath>
#include <limits>

#include "error.hpp"

namespace pnp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// CGLS stops once the normal-equation residual is this small relative to its right-hand side;
// beyond that point the recurrences only amplify rounding.
constexpr double kResidualFloor = 1e-13;

void check_len(std::size_t got, std::size_t want, const char* what) {
  require(got == want, ErrorCode::ShapeMismatch,
          std::string(what) + ": expected length " + std::to_string(want) + ", got " +
              std::to_string(got));
}

}  // namespace

// ---- CGLS ----------------------------------------------------------------------------------

CglsIterator::CglsIterator(const LinearOperator& a, std::span<const double> b,
                           std::span<const double> x0, std::optional<CglsShift> shift)
    : a_(a), x_(x0.begin(), x0.end()) {
  check_len(b.size(), a.rows(), "cgls data");
  check_len(x0.size(), a.cols(), "cgls start");
  r_ = a.apply(x_);
  for (std::size_t i = 0; i < r_.size(); ++i) r_[i] = b[i] - r_[i];
  s_ = a.apply_adjoint(r_);
  if (shift) {
    require(shift->rho > 0.0, ErrorCode::InvalidArgument, "cgls shift rho must be > 0");
    check_len(shift->anchor.size(), a.cols(), "cgls anchor");
    rho_ = shift->rho;
    anchor_.assign(shift->anchor.begin(), shift->anchor.end());
    for (std::size_t i = 0; i < s_.size(); ++i) s_[i] += rho_ * (anchor_[i] - x_[i]);
  }
  p_ = s_;
  gamma_ = dot(s_, s_);
  q_.resize(a.rows());
  // scale of the normal-equation right-hand side A^T b + rho anchor, for the residual floor
  Vector c = a.apply_adjoint(b);
  if (rho_ > 0.0) axpy(rho_, anchor_, c);
  floor_ = kResidualFloor * kResidualFloor * dot(c, c);
}

bool CglsIterator::step() {
  if (gamma_ <= floor_) return false;
  a_.apply(p_, q_);
  const double delta = dot(q_, q_) + rho_ * dot(p_, p_);
  if (!(delta > 0.0)) return false;
  const double alpha = gamma_ / delta;
  axpy(alpha, p_, x_);
  axpy(-alpha, q_, r_);
  a_.apply_adjoint(r_, s_);
  if (rho_ > 0.0)
    for (std::size_t i = 0; i < s_.size(); ++i) s_[i] += rho_ * (anchor_[i] - x_[i]);
  const double gamma_new = dot(s_, s_);
  const double beta = gamma_new / gamma_;
  gamma_ = gamma_new;
  for (std::size_t i = 0; i < p_.size(); ++i) p_[i] = s_[i] + beta * p_[i];
  return true;
}

CglsResult cgls(const LinearOperator& a, std::span<const double> b, std::size_t n,
                std::span<const double> x0, std::optional<CglsShift> shift) {
  require(n >= 1, ErrorCode::InvalidArgument, "cgls needs at least one iteration");
  CglsIterator it(a, b, x0, shift);
  CglsResult res;
  for (; res.iterations < n; ++res.iterations) {
    if (!it.step()) {
      res.breakdown = true;
      break;
    }
  }
  res.x = it.x();
  return res;
}

Vector gd_inner(const LinearOperator& a, std::span<const double> b, std::size_t n, double tau,
                std::span<const double> anchor, std::span<const double> y0) {
  require(n >= 1, ErrorCode::InvalidArgument, "gd_inner needs at least one iteration");
  check_len(anchor.size(), a.cols(), "gd anchor");
  check_len(y0.size(), a.cols(), "gd start");
  Vector x(y0.begin(), y0.end());
  for (std::size_t j = 0; j < n; ++j) {
    const Vector g = misfit_gradient(a, b, x);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = anchor[i] - tau * g[i];
  }
  return x;
}

MomentumStep momentum_point(std::span<const double> y_k, std::span<const double> y_prev,
                            double t_prev) {
  check_len(y_prev.size(), y_k.size(), "momentum");
  require(t_prev >= 1.0, ErrorCode::InvalidArgument, "momentum scalar must be >= 1");
  MomentumStep m;
  m.t = (1.0 + std::sqrt(1.0 + 4.0 * t_prev * t_prev)) / 2.0;
  const double a = (t_prev - 1.0) / m.t;
  m.point.resize(y_k.size());
  for (std::size_t i = 0; i < y_k.size(); ++i) m.point[i] = y_k[i] + a * (y_k[i] - y_prev[i]);
  return m;
}

// ---- configuration -------------------------------------------------------------------------

void FbsConfig::validate() const {
  require(std::isfinite(tau) && tau > 0.0, ErrorCode::InvalidArgument, "fbs tau must be > 0");
}

void OAConfig::validate() const {
  require(std::isfinite(phi) && phi >= 0.0 && phi <= 1.0, ErrorCode::InvalidArgument,
          "phi must lie in [0,1]");
  if (const auto* c = std::get_if<CglsInner>(&inner)) {
    require(c->iterations >= 1, ErrorCode::InvalidArgument, "inner N must be >= 1");
    require(std::isfinite(c->rho) && c->rho > 0.0, ErrorCode::InvalidArgument, "rho must be > 0");
  } else {
    const auto& g = std::get<GdInner>(inner);
    require(g.iterations >= 1, ErrorCode::InvalidArgument, "inner N must be >= 1");
    require(std::isfinite(g.tau) && g.tau > 0.0, ErrorCode::InvalidArgument,
            "inner tau must be > 0");
  }
}

void Problem::validate() const {
  require(fit_op != nullptr, ErrorCode::InvalidArgument, "problem has no operator");
  check_len(fit_data.size(), fit_op->rows(), "fit data");
  check_len(width * height, fit_op->cols(), "image shape");
  if (val_op) {
    check_len(val_data.size(), val_op->rows(), "validation data");
    check_len(val_op->cols(), fit_op->cols(), "validation operator");
  }
  if (truth) require(truth->width() == width && truth->height() == height,
                     ErrorCode::ShapeMismatch, "truth image shape");
  if (initial) require(initial->width() == width && initial->height() == height,
                       ErrorCode::ShapeMismatch, "initial image shape");
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::MaxIter: return "max_iter";
    case StopReason::CrossValidation: return "cross_validation";
    case StopReason::NonFinite: return "non_finite";
  }
  return "unknown";
}

// ---- shared iteration bookkeeping ----------------------------------------------------------

namespace {

struct StepInfo {
  double dc = kNaN;
  bool dc_stalled = false;
  double alpha = kNaN;
  double inner = 0.0;
  double misfit = 0.0;  // D at the point the direction starts from
  std::optional<bool> sufficient;
  std::function<double()> misfit_after;
};

class Recorder {
 public:
  Recorder(const Problem& prob, const RunControl& ctl) : prob_(prob), ctl_(ctl) {
    prob.validate();
    ctl.descent.validate();
    require(ctl.max_iter >= 1, ErrorCode::InvalidArgument, "max_iter must be >= 1");
    require(ctl.patience >= 1, ErrorCode::InvalidArgument, "patience must be >= 1");
  }

  Image start() const {
    return prob_.initial ? *prob_.initial : Image(prob_.width, prob_.height);
  }

  // Returns true when the run should end after iteration k.
  bool record(std::size_t k, const Image& x, const Image& z, const StepInfo& info) {
    if (!all_finite(x.values()) || !all_finite(z.values())) {
      rec_.stop_reason = StopReason::NonFinite;
      rec_.error = "non-finite iterate at k=" + std::to_string(k);
      return true;
    }
    IterationRow row;
    row.k = k;
    if (prob_.truth) {
      row.mse = mse_rel(z.values(), prob_.truth->values());
      row.psnr = psnr(z.values(), prob_.truth->values());
      row.ssim = ssim(z, *prob_.truth);
    } else {
      row.mse = row.psnr = row.ssim = kNaN;
    }
    row.d_err = residual_err(z.values(), *prob_.fit_op, prob_.fit_data);
    row.s_err = prob_.val_op ? residual_err(z.values(), *prob_.val_op, prob_.val_data) : kNaN;
    row.dc = info.dc;
    row.dc_stalled = info.dc_stalled;
    row.alpha = info.alpha;
    row.descent_inner = info.inner;
    row.sufficient = info.sufficient;
    row.regime = classify_descent(info.inner, info.misfit, info.misfit_after, ctl_.descent, k);
    row.descent_ok = row.regime != DescentRegime::Violated;
    rec_.rows.push_back(row);
    if (ctl_.observer) ctl_.observer(k, x, z);
    rec_.final_x = z;

    bool stop = k >= ctl_.max_iter;
    if (prob_.val_op) {
      s_hist_.push_back(row.s_err);
      const auto dec = should_stop(s_hist_, ctl_.patience, ctl_.max_iter);
      if (dec.k != rec_.selected_k) {
        rec_.selected_k = dec.k;
        if (dec.k == k) rec_.selected_x = z;
      }
      if (ctl_.early_stop && dec.stop && !stop) {
        rec_.stop_reason = StopReason::CrossValidation;
        stop = true;
      }
    } else {
      rec_.selected_k = k;
      rec_.selected_x = z;
    }
    return stop;
  }

  RunRecord finish() { return std::move(rec_); }

 private:
  const Problem& prob_;
  const RunControl& ctl_;
  RunRecord rec_;
  std::vector<double> s_hist_;
};

double root_alpha(const DenoiserSpec& h) {
  if (const auto* a = std::get_if<denoisers::Attenuated>(&h.node())) return a->alpha;
  if (const auto* c = std::get_if<denoisers::Combined>(&h.node())) return c->alpha;
  return kNaN;
}

struct Denoised {
  Image z;
  double alpha;
};

Denoised apply_denoiser(const DenoiserSpec& h, const Image& v, const Problem& prob,
                        const RunControl& ctl) {
  if (!ctl.alpha_search) return {h(v), root_alpha(h)};
  const auto& comb = std::get<denoisers::Combined>(h.node());
  const Image ha = (*comb.a)(v);
  const Image hb = (*comb.b)(v);
  // S is evaluated through the two projections, each computed once.
  Vector base = prob.val_op->apply(hb.values());
  axpy(-1.0, prob.val_data, base);
  const Vector slope = prob.val_op->apply(sub(ha.values(), hb.values()));
  const double nb = norm2(prob.val_data);
  Vector r(base.size());
  auto eval = [&](double a) {
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = base[i] + a * slope[i];
    return norm2(r) / nb;
  };
  const double alpha = select_alpha(ha, hb, eval, ctl.alpha_search->grid);
  Image z = hb;
  for (std::size_t i = 0; i < z.size(); ++i) z.vec()[i] += alpha * (ha.vec()[i] - hb.vec()[i]);
  return {std::move(z), alpha};
}

void check_alpha_search(const DenoiserSpec& h, const Problem& prob, const RunControl& ctl) {
  if (!ctl.alpha_search) return;
  require(std::holds_alternative<denoisers::Combined>(h.node()), ErrorCode::InvalidArgument,
          "per-iteration alpha selection needs a combined denoiser");
  require(prob.val_op != nullptr, ErrorCode::InvalidArgument,
          "per-iteration alpha selection needs validation data");
  require(ctl.alpha_search->grid >= 2, ErrorCode::InvalidArgument, "alpha grid must be >= 2");
}

void dc_into(StepInfo& info, std::span<const double> num_a, std::span<const double> num_b,
             std::span<const double> x_k, std::span<const double> x_prev) {
  const double den = norm2(sub(x_k, x_prev));
  if (den > 0.0) {
    info.dc = norm2(sub(num_a, num_b)) / den;
  } else {
    info.dc_stalled = true;
  }
}

// Residual r = A x - b, D = ||r||^2, gradient 2 A^T r in one pass.
struct Misfit {
  double value;
  Vector grad;
};

Misfit misfit_and_gradient(const LinearOperator& a, std::span<const double> b,
                           std::span<const double> x) {
  Vector r = a.apply(x);
  axpy(-1.0, b, r);
  Vector g = a.apply_adjoint(r);
  for (auto& v : g) v *= 2.0;
  return {dot(r, r), std::move(g)};
}

std::function<double()> misfit_of(const Problem& p, const Image& z) {
  return [&p, &z] { return data_misfit(*p.fit_op, p.fit_data, z.values()); };
}

}  // namespace

// ---- runs ----------------------------------------------------------------------------------

RunRecord cgls_run(const Problem& prob, const RunControl& ctl) {
  Recorder rec(prob, ctl);
  Image x = rec.start();
  CglsIterator it(*prob.fit_op, prob.fit_data, x.values());
  for (std::size_t k = 1;; ++k) {
    const Image prev = x;
    const bool moved = it.step();
    x = Image(prob.width, prob.height, it.x());
    StepInfo info;
    const auto m = misfit_and_gradient(*prob.fit_op, prob.fit_data, prev.values());
    info.inner = -dot(sub(x.values(), prev.values()), m.grad);
    info.misfit = m.value;
    info.misfit_after = misfit_of(prob, x);
    if (!moved) info.dc_stalled = true;
    if (rec.record(k, x, x, info) || !moved) break;
  }
  return rec.finish();
}

RunRecord fbs_pnp(const Problem& prob, const DenoiserSpec& h, const FbsConfig& cfg,
                  const RunControl& ctl) {
  cfg.validate();
  Recorder rec(prob, ctl);
  check_alpha_search(h, prob, ctl);
  Image z = rec.start();
  Image z_prev = z;
  Vector x_prev = z.vec();
  double t = 1.0;
  for (std::size_t k = 1;; ++k) {
    Vector base_v;
    if (cfg.fast && k >= 2) {
      auto m = momentum_point(z.values(), z_prev.values(), t);
      base_v = std::move(m.point);
      t = m.t;
    } else {
      base_v = z.vec();
    }
    const Image base(prob.width, prob.height, std::move(base_v));
    const auto m = misfit_and_gradient(*prob.fit_op, prob.fit_data, base.values());
    Image x(prob.width, prob.height);
    for (std::size_t i = 0; i < x.size(); ++i) x.vec()[i] = base.vec()[i] - cfg.tau * m.grad[i];

    StepInfo info;
    Image z_new = all_finite(x.values()) ? Image() : x;
    if (z_new.size() == 0) {
      auto d = apply_denoiser(h, x, prob, ctl);
      z_new = std::move(d.z);
      info.alpha = d.alpha;
    }
    info.inner = -dot(sub(z_new.values(), base.values()), m.grad);
    info.misfit = m.value;
    info.sufficient = sufficient_check(x.values(), z_new.values(), sub(x.values(), base.values()));
    dc_into(info, z_new.values(), x.values(), x.values(), x_prev);

    x_prev = x.vec();
    z_prev = std::move(z);
    z = std::move(z_new);
    info.misfit_after = misfit_of(prob, z);
    if (rec.record(k, x, z, info)) break;
  }
  return rec.finish();
}

RunRecord admm_pnp(const Problem& prob, const DenoiserSpec& h, const OAConfig& oa,
                   const RunControl& ctl) {
  oa.validate();
  Recorder rec(prob, ctl);
  check_alpha_search(h, prob, ctl);
  Image z = rec.start();
  Image z_prev = z;
  Image x = z;
  Image u(prob.width, prob.height);
  double t = 1.0;
  for (std::size_t k = 1;; ++k) {
    Vector anchor = sub(z.values(), u.values());
    Vector y0;
    switch (oa.warm_start) {
      case WarmStart::FromX: y0 = x.vec(); break;
      case WarmStart::FromZ: y0 = z.vec(); break;
      case WarmStart::FromMomentum:
        if (k >= 2) {
          auto m = momentum_point(z.values(), z_prev.values(), t);
          y0 = std::move(m.point);
          t = m.t;
        } else {
          y0 = z.vec();
        }
        break;
    }
    Vector x_new_v;
    if (const auto* c = std::get_if<CglsInner>(&oa.inner)) {
      x_new_v = cgls(*prob.fit_op, prob.fit_data, c->iterations, y0,
                     CglsShift{c->rho, anchor}).x;
    } else {
      const auto& g = std::get<GdInner>(oa.inner);
      x_new_v = gd_inner(*prob.fit_op, prob.fit_data, g.iterations, g.tau, anchor, y0);
    }
    Image x_new(prob.width, prob.height, std::move(x_new_v));

    Image v = x_new;
    axpy(1.0, u.values(), v.values());
    StepInfo info;
    Image z_new = all_finite(v.values()) ? Image() : v;
    if (z_new.size() == 0) {
      auto d = apply_denoiser(h, v, prob, ctl);
      z_new = std::move(d.z);
      info.alpha = d.alpha;
    }
    for (std::size_t i = 0; i < u.size(); ++i)
      u.vec()[i] += oa.phi * (x_new.vec()[i] - z_new.vec()[i]);

    const auto m = misfit_and_gradient(*prob.fit_op, prob.fit_data, z.values());
    info.inner = -dot(sub(z_new.values(), z.values()), m.grad);
    info.misfit = m.value;
    dc_into(info, z_new.values(), v.values(), x_new.values(), x.values());

    x = std::move(x_new);
    z_prev = std::move(z);
    z = std::move(z_new);
    info.misfit_after = misfit_of(prob, z);
    if (rec.record(k, x, z, info)) break;
  }
  return rec.finish();
}

}  // namespace pnp
