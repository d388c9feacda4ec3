#include "pnpct/pnpct.h"

#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "diagnostics.hpp"
#include "error.hpp"
#include "experiment.hpp"

struct pnpct_image {
  pnp::Image img;
};

struct pnpct_operator {
  pnp::ForwardOperator op;
};

struct pnpct_denoiser {
  pnp::DenoiserSpec spec;
};

struct pnpct_run {
  pnp::ExperimentOutcome outcome;
  std::string stop_reason, output_dir;
  pnpct_image selected, final_x;
};

namespace {

thread_local std::string g_last_error;

pnpct_status to_status(pnp::ErrorCode c) {
  switch (c) {
    case pnp::ErrorCode::InvalidArgument: return PNPCT_ERR_INVALID_ARGUMENT;
    case pnp::ErrorCode::ShapeMismatch: return PNPCT_ERR_SHAPE_MISMATCH;
    case pnp::ErrorCode::Io: return PNPCT_ERR_IO;
    case pnp::ErrorCode::Format: return PNPCT_ERR_FORMAT;
    case pnp::ErrorCode::Config: return PNPCT_ERR_CONFIG;
    case pnp::ErrorCode::NonFinite: return PNPCT_ERR_NON_FINITE;
    case pnp::ErrorCode::StalledConsistency: return PNPCT_ERR_STALLED;
    case pnp::ErrorCode::Breakdown: return PNPCT_ERR_BREAKDOWN;
    case pnp::ErrorCode::Runtime: return PNPCT_ERR_RUNTIME;
  }
  return PNPCT_ERR_RUNTIME;
}

pnpct_status set_error(pnpct_status s, std::string msg) {
  g_last_error = std::move(msg);
  return s;
}

template <class F>
pnpct_status guarded(F&& f) {
  try {
    g_last_error.clear();
    return f();
  } catch (const pnp::Error& e) {
    return set_error(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(PNPCT_ERR_RUNTIME, "out of memory");
  } catch (const std::exception& e) {
    return set_error(PNPCT_ERR_RUNTIME, e.what());
  }
}

#define PNPCT_NONNULL(p) \
  if (!(p)) return set_error(PNPCT_ERR_NULL, #p " must not be NULL")

bool ends_with(const std::string& s, const char* suffix) {
  const std::size_t n = std::strlen(suffix);
  return s.size() >= n && s.compare(s.size() - n, n, suffix) == 0;
}

void copy_out(const std::string& s, char* buf, std::size_t cap) {
  if (!buf || cap == 0) return;
  const std::size_t n = std::min(s.size(), cap - 1);
  std::memcpy(buf, s.data(), n);
  buf[n] = '\0';
}

}  // namespace

extern "C" {

const char* pnpct_last_error(void) { return g_last_error.c_str(); }

const char* pnpct_version(void) { return "0.1.0"; }

const char* pnpct_status_name(pnpct_status s) {
  switch (s) {
    case PNPCT_OK: return "ok";
    case PNPCT_ERR_INVALID_ARGUMENT: return "invalid argument";
    case PNPCT_ERR_SHAPE_MISMATCH: return "shape mismatch";
    case PNPCT_ERR_IO: return "i/o error";
    case PNPCT_ERR_FORMAT: return "format error";
    case PNPCT_ERR_CONFIG: return "config error";
    case PNPCT_ERR_NON_FINITE: return "non-finite value";
    case PNPCT_ERR_STALLED: return "stalled consistency";
    case PNPCT_ERR_BREAKDOWN: return "solver breakdown";
    case PNPCT_ERR_RUNTIME: return "runtime error";
    case PNPCT_ERR_NULL: return "null argument";
  }
  return "unknown";
}

pnpct_status pnpct_image_create(size_t width, size_t height, const double* data,
                                pnpct_image** out) {
  PNPCT_NONNULL(out);
  *out = nullptr;
  return guarded([&] {
    pnp::require(width > 0 && height > 0, pnp::ErrorCode::InvalidArgument,
                 "image dimensions must be positive");
    auto* h = new pnpct_image{pnp::Image(width, height)};
    if (data) std::memcpy(h->img.values().data(), data, width * height * sizeof(double));
    *out = h;
    return PNPCT_OK;
  });
}

void pnpct_image_destroy(pnpct_image* img) { delete img; }
size_t pnpct_image_width(const pnpct_image* img) { return img ? img->img.width() : 0; }
size_t pnpct_image_height(const pnpct_image* img) { return img ? img->img.height() : 0; }
const double* pnpct_image_data(const pnpct_image* img) {
  return img ? img->img.values().data() : nullptr;
}

pnpct_status pnpct_shepp_logan(size_t n, pnpct_image** out) {
  PNPCT_NONNULL(out);
  *out = nullptr;
  return guarded([&] {
    *out = new pnpct_image{pnp::shepp_logan(n)};
    return PNPCT_OK;
  });
}

pnpct_status pnpct_image_write(const pnpct_image* img, const char* path) {
  PNPCT_NONNULL(img);
  PNPCT_NONNULL(path);
  return guarded([&] {
    const std::string p(path);
    if (ends_with(p, ".pgm")) pnp::write_pgm(img->img, p);
    else if (ends_with(p, ".raw")) pnp::write_raw(img->img, p);
    else pnp::fail(pnp::ErrorCode::InvalidArgument, "unsupported extension: " + p);
    return PNPCT_OK;
  });
}

pnpct_status pnpct_image_read(const char* path, pnpct_image** out) {
  PNPCT_NONNULL(path);
  PNPCT_NONNULL(out);
  *out = nullptr;
  return guarded([&] {
    const std::string p(path);
    if (ends_with(p, ".pgm")) *out = new pnpct_image{pnp::read_pgm(p)};
    else if (ends_with(p, ".raw")) *out = new pnpct_image{pnp::read_raw_image(p)};
    else pnp::fail(pnp::ErrorCode::InvalidArgument, "unsupported extension: " + p);
    return PNPCT_OK;
  });
}

pnpct_status pnpct_geometry_defaults(size_t image_size, size_t num_angles, size_t rays_per_angle,
                                     pnpct_geometry* out) {
  PNPCT_NONNULL(out);
  return guarded([&] {
    const auto g = pnp::FanBeamGeometry::with_defaults(image_size, num_angles, rays_per_angle);
    g.validate();
    *out = {g.image_size, g.num_angles, g.rays_per_angle, g.source_distance, g.detector_width};
    return PNPCT_OK;
  });
}

pnpct_status pnpct_operator_create(const pnpct_geometry* g, pnpct_operator** out) {
  PNPCT_NONNULL(g);
  PNPCT_NONNULL(out);
  *out = nullptr;
  return guarded([&] {
    pnp::FanBeamGeometry geo{g->image_size, g->num_angles, g->rays_per_angle, g->source_distance,
                             g->detector_width};
    *out = new pnpct_operator{pnp::build_operator(geo)};
    return PNPCT_OK;
  });
}

void pnpct_operator_destroy(pnpct_operator* op) { delete op; }

pnpct_status pnpct_operator_shape(const pnpct_operator* op, size_t* rows, size_t* cols,
                                  size_t* nnz) {
  PNPCT_NONNULL(op);
  if (rows) *rows = op->op.rows();
  if (cols) *cols = op->op.cols();
  if (nnz) *nnz = op->op.matrix().val.size();
  return PNPCT_OK;
}

pnpct_status pnpct_operator_apply(const pnpct_operator* op, const double* x, size_t nx, double* y,
                                  size_t ny) {
  PNPCT_NONNULL(op);
  PNPCT_NONNULL(x);
  PNPCT_NONNULL(y);
  return guarded([&] {
    pnp::require(nx == op->op.cols() && ny == op->op.rows(), pnp::ErrorCode::ShapeMismatch,
                 "operator apply: buffer sizes do not match the operator");
    op->op.apply({x, nx}, {y, ny});
    return PNPCT_OK;
  });
}

pnpct_status pnpct_operator_adjoint(const pnpct_operator* op, const double* y, size_t ny,
                                    double* x, size_t nx) {
  PNPCT_NONNULL(op);
  PNPCT_NONNULL(x);
  PNPCT_NONNULL(y);
  return guarded([&] {
    pnp::require(nx == op->op.cols() && ny == op->op.rows(), pnp::ErrorCode::ShapeMismatch,
                 "operator adjoint: buffer sizes do not match the operator");
    op->op.apply_adjoint({y, ny}, {x, nx});
    return PNPCT_OK;
  });
}

pnpct_status pnpct_add_noise(const double* b, size_t m, double level, uint64_t seed, double* out) {
  PNPCT_NONNULL(b);
  PNPCT_NONNULL(out);
  return guarded([&] {
    pnp::Sinogram s(m, 1, pnp::Vector(b, b + m));
    const pnp::Sinogram n = pnp::add_noise(s, level, seed);
    std::memcpy(out, n.values().data(), m * sizeof(double));
    return PNPCT_OK;
  });
}

pnpct_status pnpct_denoiser_from_json(const char* json, const char* base_dir,
                                      pnpct_denoiser** out) {
  PNPCT_NONNULL(json);
  PNPCT_NONNULL(out);
  *out = nullptr;
  return guarded([&] {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(json);
    } catch (const nlohmann::json::parse_error& e) {
      pnp::fail(pnp::ErrorCode::Config, e.what());
    }
    *out = new pnpct_denoiser{pnp::parse_denoiser(doc, base_dir ? base_dir : ".")};
    return PNPCT_OK;
  });
}

void pnpct_denoiser_destroy(pnpct_denoiser* d) { delete d; }

pnpct_status pnpct_denoiser_describe(const pnpct_denoiser* d, char* buf, size_t cap) {
  PNPCT_NONNULL(d);
  PNPCT_NONNULL(buf);
  return guarded([&] {
    copy_out(d->spec.describe(), buf, cap);
    return PNPCT_OK;
  });
}

pnpct_status pnpct_denoiser_apply(const pnpct_denoiser* d, const pnpct_image* in,
                                  pnpct_image** out) {
  PNPCT_NONNULL(d);
  PNPCT_NONNULL(in);
  PNPCT_NONNULL(out);
  *out = nullptr;
  return guarded([&] {
    *out = new pnpct_image{d->spec(in->img)};
    return PNPCT_OK;
  });
}

pnpct_status pnpct_metrics(const pnpct_image* x, const pnpct_image* ref, double* mse,
                           double* psnr, double* ssim) {
  PNPCT_NONNULL(x);
  PNPCT_NONNULL(ref);
  return guarded([&] {
    pnp::require(x->img.same_shape(ref->img), pnp::ErrorCode::ShapeMismatch,
                 "metrics: images differ in shape");
    if (mse) *mse = pnp::mse_rel(x->img.values(), ref->img.values());
    if (psnr) *psnr = pnp::psnr(x->img.values(), ref->img.values());
    if (ssim) *ssim = pnp::ssim(x->img, ref->img);
    return PNPCT_OK;
  });
}

pnpct_status pnpct_config_validate(const char* path, char* report, size_t cap) {
  PNPCT_NONNULL(path);
  return guarded([&] {
    const auto problems = pnp::validate_config_file(path);
    std::string text;
    for (const auto& p : problems) text += p + "\n";
    copy_out(text, report, cap);
    if (problems.empty()) return PNPCT_OK;
    return set_error(PNPCT_ERR_CONFIG, problems.front());
  });
}

pnpct_status pnpct_run_config(const char* path, const char* output_dir, pnpct_run** out) {
  PNPCT_NONNULL(path);
  PNPCT_NONNULL(out);
  *out = nullptr;
  return guarded([&] {
    const pnp::ExperimentConfig cfg = pnp::load_config(path);
    std::optional<std::filesystem::path> dir;
    if (output_dir) dir = output_dir;
    auto* r = new pnpct_run{pnp::run_experiment(cfg, dir), {}, {}, {}, {}};
    r->stop_reason = pnp::to_string(r->outcome.record.stop_reason);
    r->output_dir = r->outcome.output_dir.string();
    r->selected.img = r->outcome.record.selected_x;
    r->final_x.img = r->outcome.record.final_x;
    *out = r;
    if (r->outcome.record.aborted())
      return set_error(PNPCT_ERR_NON_FINITE, r->outcome.record.error);
    return PNPCT_OK;
  });
}

void pnpct_run_destroy(pnpct_run* r) { delete r; }
size_t pnpct_run_rows(const pnpct_run* r) { return r ? r->outcome.record.rows.size() : 0; }

pnpct_status pnpct_run_row(const pnpct_run* r, size_t i, pnpct_row* out) {
  PNPCT_NONNULL(r);
  PNPCT_NONNULL(out);
  const auto& rows = r->outcome.record.rows;
  if (i >= rows.size()) return set_error(PNPCT_ERR_INVALID_ARGUMENT, "row index out of range");
  const auto& w = rows[i];
  *out = {w.k, w.mse, w.psnr, w.ssim, w.d_err, w.s_err, w.dc, w.alpha, w.descent_ok ? 1 : 0};
  return PNPCT_OK;
}

size_t pnpct_run_selected_k(const pnpct_run* r) { return r ? r->outcome.record.selected_k : 0; }
const char* pnpct_run_stop_reason(const pnpct_run* r) { return r ? r->stop_reason.c_str() : ""; }
const char* pnpct_run_output_dir(const pnpct_run* r) { return r ? r->output_dir.c_str() : ""; }
const pnpct_image* pnpct_run_selected(const pnpct_run* r) { return r ? &r->selected : nullptr; }
const pnpct_image* pnpct_run_final(const pnpct_run* r) { return r ? &r->final_x : nullptr; }

pnpct_status pnpct_denoise_bench(const char* path, const char* output_dir) {
  PNPCT_NONNULL(path);
  return guarded([&] {
    const auto cfg = pnp::load_bench_config(path);
    std::optional<std::filesystem::path> dir;
    if (output_dir) dir = output_dir;
    pnp::denoise_bench(cfg, dir);
    return PNPCT_OK;
  });
}

}  // extern "C"
