#include "experiment.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "diagnostics.hpp"
#include "error.hpp"

namespace pnp {

namespace fs = std::filesystem;
using nlohmann::json;

// ---- problem setup -------------------------------------------------------------------------

namespace {

Vector gather_rows(const Vector& v, const std::vector<std::size_t>& idx) {
  Vector out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
  return out;
}

}  // namespace

// The split seed is derived from the noise seed so one number fixes the whole experiment.
ModelProblem::ModelProblem(const FanBeamGeometry& g, double noise_level, std::uint64_t seed,
                           double cv_fraction)
    : truth_(shepp_logan(g.image_size)),
      op_(build_operator(g)),
      clean_(apply(op_, truth_)),
      noisy_(add_noise(clean_, noise_level, seed)),
      split_(split_validation(op_.rows(), cv_fraction, seed + 1)),
      fit_(op_, split_.fit_indices),
      val_(op_, split_.validation_indices),
      b_fit_(gather_rows(noisy_.vec(), split_.fit_indices)),
      b_val_(gather_rows(noisy_.vec(), split_.validation_indices)) {
  const Vector clean_fit = gather_rows(clean_.vec(), split_.fit_indices);
  delta_fit_ = norm2(sub(b_fit_, clean_fit));
}

Problem ModelProblem::problem(bool with_truth) const {
  Problem p;
  p.fit_op = &fit_;
  p.fit_data = b_fit_;
  p.val_op = &val_;
  p.val_data = b_val_;
  p.truth = with_truth ? &truth_ : nullptr;
  p.width = p.height = truth_.width();
  return p;
}

fs::path builtin_cnn_weights() { return fs::path(PNPCT_DATA_DIR) / "cnn_phantom_7x16.pnpw"; }

// ---- config parsing -----------------------------------------------------------------------

namespace {

// Collects problems instead of stopping at the first one.
struct Issues {
  std::vector<std::string> list;
  void add(const std::string& where, const std::string& what) {
    list.push_back(where.empty() ? what : where + ": " + what);
  }
};

std::string join(const std::string& a, const std::string& b) { return a.empty() ? b : a + "." + b; }

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed,
                Issues& is) {
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) is.add(where, "unknown key '" + it.key() + "'");
}

template <class T>
std::optional<T> get_num(const json& j, const char* key, const std::string& where, Issues& is) {
  if (!j.contains(key)) return std::nullopt;
  const json& v = j.at(key);
  if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer() || (v.is_number_integer() && v.get<long long>() < 0)) {
      is.add(join(where, key), "expected a non-negative integer");
      return std::nullopt;
    }
    return v.get<T>();
  } else {
    if (!v.is_number()) {
      is.add(join(where, key), "expected a number");
      return std::nullopt;
    }
    const double d = v.get<double>();
    if (!std::isfinite(d)) {
      is.add(join(where, key), "must be finite");
      return std::nullopt;
    }
    return d;
  }
}

std::optional<bool> get_bool(const json& j, const char* key, const std::string& where, Issues& is) {
  if (!j.contains(key)) return std::nullopt;
  if (!j.at(key).is_boolean()) {
    is.add(join(where, key), "expected true or false");
    return std::nullopt;
  }
  return j.at(key).get<bool>();
}

std::optional<std::string> get_str(const json& j, const char* key, const std::string& where,
                                   Issues& is) {
  if (!j.contains(key)) return std::nullopt;
  if (!j.at(key).is_string()) {
    is.add(join(where, key), "expected a string");
    return std::nullopt;
  }
  return j.at(key).get<std::string>();
}

bool require_object(const json& j, const std::string& where, Issues& is) {
  if (j.is_object()) return true;
  is.add(where, "expected an object");
  return false;
}

std::optional<DenoiserSpec> denoiser_node(const json& j, const std::string& where,
                                          const fs::path& base, Issues& is, bool* auto_alpha,
                                          bool root);

std::optional<DenoiserSpec> child(const json& j, const char* key, const std::string& where,
                                  const fs::path& base, Issues& is) {
  if (!j.contains(key)) {
    is.add(where, std::string("missing '") + key + "'");
    return std::nullopt;
  }
  return denoiser_node(j.at(key), join(where, key), base, is, nullptr, false);
}

std::optional<double> unit_alpha(const json& j, const std::string& where, Issues& is) {
  auto a = get_num<double>(j, "alpha", where, is);
  if (!a) {
    if (!j.contains("alpha")) is.add(where, "missing 'alpha'");
    return std::nullopt;
  }
  if (*a < 0.0 || *a > 1.0) {
    is.add(join(where, "alpha"), "must lie in [0,1]");
    return std::nullopt;
  }
  return a;
}

std::optional<DenoiserSpec> denoiser_node(const json& j, const std::string& where,
                                          const fs::path& base, Issues& is, bool* auto_alpha,
                                          bool root) {
  if (!require_object(j, where, is)) return std::nullopt;
  auto type = get_str(j, "type", where, is);
  if (!type) {
    if (!j.contains("type")) is.add(where, "missing 'type'");
    return std::nullopt;
  }
  const std::size_t before = is.list.size();
  auto positive = [&](const char* key, double def) {
    auto v = get_num<double>(j, key, where, is).value_or(def);
    if (!(v > 0.0)) is.add(join(where, key), "must be positive");
    return v;
  };

  if (*type == "identity") {
    check_keys(j, where, {"type"}, is);
    return DenoiserSpec::identity();
  }
  if (*type == "gaussian") {
    check_keys(j, where, {"type", "sigma"}, is);
    const double s = positive("sigma", 1.0);
    if (is.list.size() != before) return std::nullopt;
    return DenoiserSpec::gaussian_blur(s);
  }
  if (*type == "median") {
    check_keys(j, where, {"type", "window"}, is);
    const auto w = get_num<std::size_t>(j, "window", where, is).value_or(3);
    if (w == 0 || w % 2 == 0) is.add(join(where, "window"), "must be a positive odd integer");
    if (is.list.size() != before) return std::nullopt;
    return DenoiserSpec::median(w);
  }
  if (*type == "soft_threshold") {
    check_keys(j, where, {"type", "t"}, is);
    const double t = get_num<double>(j, "t", where, is).value_or(0.0);
    if (t < 0.0) is.add(join(where, "t"), "must be non-negative");
    if (is.list.size() != before) return std::nullopt;
    return DenoiserSpec::soft_threshold(t);
  }
  if (*type == "quadratic_shrink") {
    check_keys(j, where, {"type", "gamma"}, is);
    const double g = get_num<double>(j, "gamma", where, is).value_or(0.0);
    if (g < 0.0) is.add(join(where, "gamma"), "must be non-negative");
    if (is.list.size() != before) return std::nullopt;
    return DenoiserSpec::quadratic_shrink(g);
  }
  if (*type == "patch") {
    check_keys(j, where,
               {"type", "sigma", "hard_threshold", "patch", "search_window", "max_group", "step",
                "match_threshold"},
               is);
    PatchParams p;
    if (j.contains("sigma") && j.contains("hard_threshold"))
      is.add(where, "give either 'sigma' or 'hard_threshold', not both");
    if (auto s = get_num<double>(j, "sigma", where, is)) {
      if (*s < 0.0) is.add(join(where, "sigma"), "must be non-negative");
      p = weak_classical_params(*s);
    }
    if (auto t = get_num<double>(j, "hard_threshold", where, is)) p.hard_threshold = *t;
    if (auto v = get_num<std::size_t>(j, "patch", where, is)) p.patch = *v;
    if (auto v = get_num<std::size_t>(j, "search_window", where, is)) p.search_window = *v;
    if (auto v = get_num<std::size_t>(j, "max_group", where, is)) p.max_group = *v;
    if (auto v = get_num<std::size_t>(j, "step", where, is)) p.step = *v;
    if (auto v = get_num<double>(j, "match_threshold", where, is)) p.match_threshold = *v;
    if (is.list.size() != before) return std::nullopt;
    try {
      p.validate();
    } catch (const Error& e) {
      is.add(where, e.what());
      return std::nullopt;
    }
    return DenoiserSpec::patch_collaborative(p);
  }
  if (*type == "cnn") {
    check_keys(j, where, {"type", "weights"}, is);
    const std::string w = get_str(j, "weights", where, is).value_or("builtin");
    const fs::path path = w == "builtin" ? builtin_cnn_weights() : base / fs::path(w);
    try {
      return DenoiserSpec::cnn_residual(
          std::make_shared<const CnnWeights>(load_cnn_weights(path.string())));
    } catch (const Error& e) {
      is.add(join(where, "weights"), e.what());
      return std::nullopt;
    }
  }
  if (*type == "attenuated") {
    check_keys(j, where, {"type", "alpha", "inner"}, is);
    auto a = unit_alpha(j, where, is);
    auto in = child(j, "inner", where, base, is);
    if (!a || !in) return std::nullopt;
    return DenoiserSpec::attenuated(std::move(*in), *a);
  }
  if (*type == "combined") {
    check_keys(j, where, {"type", "alpha", "a", "b"}, is);
    std::optional<double> a;
    if (j.contains("alpha") && j.at("alpha").is_string()) {
      if (j.at("alpha").get<std::string>() != "auto") {
        is.add(join(where, "alpha"), "must be a number in [0,1] or \"auto\"");
      } else if (!root || auto_alpha == nullptr) {
        is.add(join(where, "alpha"), "\"auto\" is only allowed on the outermost denoiser");
      } else {
        *auto_alpha = true;
        a = 0.5;
      }
    } else {
      a = unit_alpha(j, where, is);
    }
    auto da = child(j, "a", where, base, is);
    auto db = child(j, "b", where, base, is);
    if (!a || !da || !db) return std::nullopt;
    return DenoiserSpec::combined(std::move(*da), std::move(*db), *a);
  }
  is.add(join(where, "type"), "unknown denoiser type '" + *type + "'");
  return std::nullopt;
}

ExperimentConfig parse_into(const json& doc, const fs::path& base, Issues& is) {
  ExperimentConfig c;
  if (!require_object(doc, "", is)) return c;
  check_keys(doc, "",
             {"phantom_size", "geometry", "noise_level", "seed", "cv_fraction", "algorithm",
              "denoiser", "fbs", "admm", "max_iter", "patience", "early_stop", "alpha_grid",
              "descent", "output_dir"},
             is);

  c.phantom_size = get_num<std::size_t>(doc, "phantom_size", "", is).value_or(64);
  if (c.phantom_size < 16) is.add("phantom_size", "must be at least 16");

  std::size_t angles = 60, rays = 0;
  std::optional<double> src, width;
  if (doc.contains("geometry") && require_object(doc.at("geometry"), "geometry", is)) {
    const json& g = doc.at("geometry");
    check_keys(g, "geometry", {"num_angles", "rays_per_angle", "source_distance", "detector_width"},
               is);
    angles = get_num<std::size_t>(g, "num_angles", "geometry", is).value_or(angles);
    rays = get_num<std::size_t>(g, "rays_per_angle", "geometry", is).value_or(0);
    src = get_num<double>(g, "source_distance", "geometry", is);
    width = get_num<double>(g, "detector_width", "geometry", is);
  }
  if (angles == 0) is.add("geometry.num_angles", "must be positive");
  if (c.phantom_size >= 16 && angles > 0) {
    c.geometry = FanBeamGeometry::with_defaults(c.phantom_size, angles, rays);
    if (src) c.geometry.source_distance = *src;
    if (width) c.geometry.detector_width = *width;
    try {
      c.geometry.validate();
    } catch (const Error& e) {
      is.add("geometry", e.what());
    }
  }

  c.noise_level = get_num<double>(doc, "noise_level", "", is).value_or(c.noise_level);
  if (c.noise_level < 0.0) is.add("noise_level", "must be non-negative");
  c.seed = get_num<std::uint64_t>(doc, "seed", "", is).value_or(c.seed);
  c.cv_fraction = get_num<double>(doc, "cv_fraction", "", is).value_or(c.cv_fraction);
  if (!(c.cv_fraction > 0.0 && c.cv_fraction < 1.0)) is.add("cv_fraction", "must lie in (0,1)");

  const std::string algo = get_str(doc, "algorithm", "", is).value_or("fbs_fast");
  if (algo == "cgls") c.algorithm = Algorithm::Cgls;
  else if (algo == "fbs") c.algorithm = Algorithm::Fbs;
  else if (algo == "fbs_fast") c.algorithm = Algorithm::FbsFast;
  else if (algo == "admm") c.algorithm = Algorithm::Admm;
  else is.add("algorithm", "unknown algorithm '" + algo + "' (cgls, fbs, fbs_fast, admm)");

  bool auto_alpha = false;
  if (doc.contains("denoiser")) {
    if (auto d = denoiser_node(doc.at("denoiser"), "denoiser", base, is, &auto_alpha, true))
      c.denoiser = std::move(*d);
  }

  if (doc.contains("fbs") && require_object(doc.at("fbs"), "fbs", is)) {
    const json& f = doc.at("fbs");
    check_keys(f, "fbs", {"tau"}, is);
    c.fbs.tau = get_num<double>(f, "tau", "fbs", is).value_or(c.fbs.tau);
    if (!(c.fbs.tau > 0.0)) is.add("fbs.tau", "must be positive");
  }
  c.fbs.fast = c.algorithm == Algorithm::FbsFast;

  if (doc.contains("admm") && require_object(doc.at("admm"), "admm", is)) {
    const json& a = doc.at("admm");
    check_keys(a, "admm", {"inner", "iterations", "rho", "tau", "warm_start", "phi"}, is);
    const std::string inner = get_str(a, "inner", "admm", is).value_or("cgls");
    if (inner == "cgls") {
      CglsInner ci;
      ci.iterations = get_num<std::size_t>(a, "iterations", "admm", is).value_or(ci.iterations);
      ci.rho = get_num<double>(a, "rho", "admm", is).value_or(ci.rho);
      if (!(ci.rho > 0.0)) is.add("admm.rho", "must be positive");
      if (a.contains("tau")) is.add("admm.tau", "only used with the gd inner solver");
      c.admm.inner = ci;
    } else if (inner == "gd") {
      GdInner gi;
      gi.iterations = get_num<std::size_t>(a, "iterations", "admm", is).value_or(gi.iterations);
      gi.tau = get_num<double>(a, "tau", "admm", is).value_or(gi.tau);
      if (!(gi.tau > 0.0)) is.add("admm.tau", "must be positive");
      if (a.contains("rho")) is.add("admm.rho", "only used with the cgls inner solver");
      c.admm.inner = gi;
    } else {
      is.add("admm.inner", "unknown inner solver '" + inner + "' (cgls, gd)");
    }
    const std::string ws = get_str(a, "warm_start", "admm", is).value_or("x");
    if (ws == "x") c.admm.warm_start = WarmStart::FromX;
    else if (ws == "z") c.admm.warm_start = WarmStart::FromZ;
    else if (ws == "momentum") c.admm.warm_start = WarmStart::FromMomentum;
    else is.add("admm.warm_start", "unknown warm start '" + ws + "' (x, z, momentum)");
    c.admm.phi = get_num<double>(a, "phi", "admm", is).value_or(c.admm.phi);
    if (c.admm.phi < 0.0 || c.admm.phi > 1.0) is.add("admm.phi", "must lie in [0,1]");
    std::visit([&](const auto& in) {
      if (in.iterations == 0) is.add("admm.iterations", "must be positive");
    }, c.admm.inner);
  }

  c.control.max_iter = get_num<std::size_t>(doc, "max_iter", "", is).value_or(250);
  if (c.control.max_iter == 0) is.add("max_iter", "must be positive");
  c.control.patience = get_num<std::size_t>(doc, "patience", "", is).value_or(10);
  if (c.control.patience == 0) is.add("patience", "must be positive");
  c.control.early_stop = get_bool(doc, "early_stop", "", is).value_or(true);
  const std::size_t grid = get_num<std::size_t>(doc, "alpha_grid", "", is).value_or(21);
  if (grid < 2) is.add("alpha_grid", "must be at least 2");
  if (auto_alpha) c.control.alpha_search = AlphaSearch{grid};
  if (auto_alpha && c.algorithm == Algorithm::Cgls)
    is.add("denoiser.alpha", "\"auto\" needs a plug-and-play algorithm");

  if (doc.contains("descent") && require_object(doc.at("descent"), "descent", is)) {
    const json& d = doc.at("descent");
    check_keys(d, "descent", {"eps1", "eps2", "k_cap"}, is);
    c.control.descent.eps1 = get_num<double>(d, "eps1", "descent", is).value_or(0.0);
    if (d.contains("eps2") && !(d.at("eps2").is_string() && d.at("eps2") == "auto"))
      c.eps2 = get_num<double>(d, "eps2", "descent", is);
    if (d.contains("k_cap") && !d.at("k_cap").is_null())
      c.control.descent.k_cap = get_num<std::size_t>(d, "k_cap", "descent", is);
  }
  if (c.control.descent.eps1 < 0.0) is.add("descent.eps1", "must be non-negative");
  if (c.eps2 && *c.eps2 < c.control.descent.eps1)
    is.add("descent.eps2", "must be at least eps1");

  if (auto o = get_str(doc, "output_dir", "", is)) c.output_dir = base / fs::path(*o);
  else c.output_dir = base / "out";
  return c;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Config, path.string() + ": " + e.what());
  }
}

std::string join_issues(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : "; ") + x;
  return s;
}

}  // namespace

DenoiserSpec parse_denoiser(const json& j, const fs::path& base_dir, bool* auto_alpha) {
  Issues is;
  bool local = false;
  auto d = denoiser_node(j, "denoiser", base_dir, is, auto_alpha ? auto_alpha : &local, true);
  if (!is.list.empty()) fail(ErrorCode::Config, join_issues(is.list));
  return std::move(*d);
}

ExperimentConfig parse_config(const json& doc, const fs::path& base_dir) {
  Issues is;
  ExperimentConfig c = parse_into(doc, base_dir, is);
  if (!is.list.empty()) fail(ErrorCode::Config, join_issues(is.list));
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  return parse_config(read_json_file(path), path.parent_path());
}

namespace {
BenchConfig parse_bench_into(const json& doc, const fs::path& base, Issues& is);
}  // namespace

std::vector<std::string> validate_config_file(const fs::path& path) {
  json doc;
  try {
    doc = read_json_file(path);
  } catch (const Error& e) {
    return {e.what()};
  }
  Issues is;
  // a "denoisers" table marks a denoise-bench file
  if (doc.is_object() && doc.contains("denoisers"))
    parse_bench_into(doc, path.parent_path(), is);
  else
    parse_into(doc, path.parent_path(), is);
  return is.list;
}

// ---- output --------------------------------------------------------------------------------

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

const IterationRow* row_at(const RunRecord& r, std::size_t k) {
  for (const auto& row : r.rows)
    if (row.k == k) return &row;
  return nullptr;
}

fs::path resolve_output(const fs::path& configured, const std::optional<fs::path>& override_dir) {
  if (override_dir) return *override_dir;
  if (const char* env = std::getenv("PNPCT_OUTPUT_DIR"); env && *env) return fs::path(env);
  return configured;
}

}  // namespace

void write_iterations_csv(const RunRecord& r, const fs::path& path) {
  auto out = open_out(path);
  out << "k,mse,psnr,ssim,d_err,s_err,dc,alpha,descent_ok\n";
  for (const auto& row : r.rows) {
    out << row.k << ',' << format_number(row.mse) << ',' << format_number(row.psnr) << ','
        << format_number(row.ssim) << ',' << format_number(row.d_err) << ','
        << format_number(row.s_err) << ',' << format_number(row.dc) << ','
        << format_number(row.alpha) << ',' << (row.descent_ok ? 1 : 0) << '\n';
  }
}

void write_summary_csv(const RunRecord& r, const fs::path& path) {
  auto out = open_out(path);
  out << "k_selected,mse,d_err,s_err,psnr,ssim,min_mse,min_mse_k\n";
  const IterationRow* sel = row_at(r, r.selected_k);
  const IterationRow* best = nullptr;
  for (const auto& row : r.rows)
    if (!best || row.mse < best->mse) best = &row;
  if (!sel || !best) return;
  out << sel->k << ',' << format_number(sel->mse) << ',' << format_number(sel->d_err) << ','
      << format_number(sel->s_err) << ',' << format_number(sel->psnr) << ','
      << format_number(sel->ssim) << ',' << format_number(best->mse) << ',' << best->k << '\n';
}

void write_curve_csv(const RunRecord& r, const fs::path& path, bool alpha) {
  auto out = open_out(path);
  out << (alpha ? "k,alpha\n" : "k,dc\n");
  for (const auto& row : r.rows)
    out << row.k << ',' << format_number(alpha ? row.alpha : row.dc) << '\n';
}

// ---- running --------------------------------------------------------------------------------

RunRecord run_algorithm(const ExperimentConfig& cfg, const ModelProblem& mp) {
  RunControl ctl = cfg.control;
  const double d = mp.fit_noise_norm();
  ctl.descent.eps2 = cfg.eps2.value_or(d * d);
  if (ctl.descent.eps2 < ctl.descent.eps1) ctl.descent.eps2 = ctl.descent.eps1;
  const Problem prob = mp.problem();
  switch (cfg.algorithm) {
    case Algorithm::Cgls: return cgls_run(prob, ctl);
    case Algorithm::Fbs:
    case Algorithm::FbsFast: {
      FbsConfig f = cfg.fbs;
      f.fast = cfg.algorithm == Algorithm::FbsFast;
      return fbs_pnp(prob, cfg.denoiser, f, ctl);
    }
    case Algorithm::Admm: return admm_pnp(prob, cfg.denoiser, cfg.admm, ctl);
  }
  fail(ErrorCode::Runtime, "unknown algorithm");
}

ExperimentOutcome run_experiment(const ExperimentConfig& cfg,
                                 const std::optional<fs::path>& output_override) {
  ExperimentOutcome res;
  res.output_dir = resolve_output(cfg.output_dir, output_override);
  fs::create_directories(res.output_dir);
  const fs::path& dir = res.output_dir;

  ModelProblem mp(cfg.geometry, cfg.noise_level, cfg.seed, cfg.cv_fraction);
  res.record = run_algorithm(cfg, mp);
  const RunRecord& r = res.record;

  write_iterations_csv(r, dir / "iterations.csv");
  write_summary_csv(r, dir / "summary.csv");
  write_curve_csv(r, dir / "dc.csv", false);
  write_curve_csv(r, dir / "alpha.csv", true);
  if (!r.rows.empty()) {
    write_pgm(r.selected_x, (dir / "selected.pgm").string());
    write_pgm(r.final_x, (dir / "final.pgm").string());
    write_raw(r.selected_x, (dir / "selected.raw").string());
    write_raw(r.final_x, (dir / "final.raw").string());
  }

  json meta;
  meta["status"] = r.aborted() ? "aborted" : "ok";
  meta["stop_reason"] = to_string(r.stop_reason);
  meta["selected_k"] = r.selected_k;
  meta["iterations"] = r.rows.size();
  meta["denoiser"] = cfg.denoiser.describe();
  if (!r.error.empty()) meta["error"] = r.error;
  auto out = open_out(dir / "run.json");
  out << meta.dump(2) << '\n';
  return res;
}

// ---- denoiser benchmark ---------------------------------------------------------------------

namespace {

BenchConfig parse_bench_into(const json& doc, const fs::path& base, Issues& is) {
  BenchConfig c;
  if (!require_object(doc, "", is)) return c;
  check_keys(doc, "", {"phantom_size", "sigmas", "seed", "denoisers", "output_dir"}, is);
  c.phantom_size = get_num<std::size_t>(doc, "phantom_size", "", is).value_or(64);
  if (c.phantom_size < 16) is.add("phantom_size", "must be at least 16");
  c.seed = get_num<std::uint64_t>(doc, "seed", "", is).value_or(1);
  if (doc.contains("sigmas")) {
    c.sigmas.clear();
    if (!doc.at("sigmas").is_array()) is.add("sigmas", "expected an array");
    else
      for (const auto& s : doc.at("sigmas")) {
        if (!s.is_number() || s.get<double>() < 0.0) is.add("sigmas", "entries must be >= 0");
        else c.sigmas.push_back(s.get<double>());
      }
  }
  if (!doc.contains("denoisers") || !doc.at("denoisers").is_object() ||
      doc.at("denoisers").empty()) {
    is.add("denoisers", "expected a non-empty object mapping names to denoisers");
  } else {
    for (auto it = doc.at("denoisers").begin(); it != doc.at("denoisers").end(); ++it) {
      auto d = denoiser_node(it.value(), "denoisers." + it.key(), base, is, nullptr, false);
      if (d) c.denoisers.push_back({it.key(), std::move(*d)});
    }
  }
  c.output_dir = base / get_str(doc, "output_dir", "", is).value_or("bench");
  return c;
}

}  // namespace

BenchConfig load_bench_config(const fs::path& path) {
  Issues is;
  auto c = parse_bench_into(read_json_file(path), path.parent_path(), is);
  if (!is.list.empty()) fail(ErrorCode::Config, join_issues(is.list));
  return c;
}

std::vector<BenchRow> denoise_bench(const BenchConfig& cfg,
                                    const std::optional<fs::path>& output_override) {
  const fs::path dir = resolve_output(cfg.output_dir, output_override);
  fs::create_directories(dir);
  const Image truth = shepp_logan(cfg.phantom_size);
  std::vector<BenchRow> rows;
  for (std::size_t si = 0; si < cfg.sigmas.size(); ++si) {
    const double sigma = cfg.sigmas[si];
    std::mt19937_64 rng(cfg.seed + si);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Image noisy = truth;
    for (double& v : noisy.values()) v += sigma * gauss(rng);
    const double np = psnr(noisy.values(), truth.values());
    const double ns = ssim(noisy, truth);
    const std::string tag = "s" + format_number(sigma);
    write_pgm(noisy, (dir / ("noisy_" + tag + ".pgm")).string());
    for (const auto& d : cfg.denoisers) {
      const Image out = d.spec(noisy);
      rows.push_back({sigma, d.name, np, ns, psnr(out.values(), truth.values()), ssim(out, truth)});
      write_pgm(out, (dir / (d.name + "_" + tag + ".pgm")).string());
    }
  }
  auto out = open_out(dir / "bench.csv");
  out << "sigma,denoiser,noisy_psnr,noisy_ssim,denoised_psnr,denoised_ssim\n";
  for (const auto& r : rows)
    out << format_number(r.sigma) << ',' << r.denoiser << ',' << format_number(r.noisy_psnr) << ','
        << format_number(r.noisy_ssim) << ',' << format_number(r.denoised_psnr) << ','
        << format_number(r.denoised_ssim) << '\n';
  return rows;
}

}  // namespace pnp
