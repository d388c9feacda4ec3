#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "denoise.hpp"
#include "solvers.hpp"
#include "tomo_model.hpp"

namespace pnp {

// The simulated CT problem: phantom, operator, noisy data and its fit/validation split.
// Holds operators that reference each other, so it is created on the heap and never moved.
class ModelProblem {
 public:
  ModelProblem(const FanBeamGeometry& g, double noise_level, std::uint64_t seed,
               double cv_fraction);
  ModelProblem(const ModelProblem&) = delete;
  ModelProblem& operator=(const ModelProblem&) = delete;

  const Image& truth() const noexcept { return truth_; }
  const ForwardOperator& op() const noexcept { return op_; }
  const Sinogram& clean() const noexcept { return clean_; }
  const Sinogram& noisy() const noexcept { return noisy_; }
  const DataSplit& split() const noexcept { return split_; }
  const RowSubsetOperator& fit_op() const noexcept { return fit_; }
  const RowSubsetOperator& val_op() const noexcept { return val_; }
  const Vector& fit_data() const noexcept { return b_fit_; }
  const Vector& val_data() const noexcept { return b_val_; }
  // ||b_delta - b|| over the fit rows
  double fit_noise_norm() const noexcept { return delta_fit_; }

  Problem problem(bool with_truth = true) const;

 private:
  Image truth_;
  ForwardOperator op_;
  Sinogram clean_, noisy_;
  DataSplit split_;
  RowSubsetOperator fit_, val_;
  Vector b_fit_, b_val_;
  double delta_fit_ = 0.0;
};

enum class Algorithm { Cgls, Fbs, FbsFast, Admm };

struct ExperimentConfig {
  std::size_t phantom_size = 64;
  FanBeamGeometry geometry;
  double noise_level = 0.01;
  std::uint64_t seed = 1;
  double cv_fraction = 0.01;
  Algorithm algorithm = Algorithm::FbsFast;
  DenoiserSpec denoiser;
  FbsConfig fbs;
  OAConfig admm;
  RunControl control;
  std::optional<double> eps2;  // defaults to delta^2 of the fit data
  std::filesystem::path output_dir = "out";
};

// Parses a configuration document; relative paths resolve against base_dir.
// Throws Error(ErrorCode::Config) listing every problem found.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

// Every problem in the file (run or denoise-bench config), empty when it is valid.
std::vector<std::string> validate_config_file(const std::filesystem::path& path);

DenoiserSpec parse_denoiser(const nlohmann::json& j, const std::filesystem::path& base_dir,
                            bool* auto_alpha = nullptr);

std::filesystem::path builtin_cnn_weights();

struct ExperimentOutcome {
  RunRecord record;
  std::filesystem::path output_dir;
};

// Runs the configuration and writes all artifacts. output_dir precedence:
// explicit override, then PNPCT_OUTPUT_DIR, then the config value.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg,
                                 const std::optional<std::filesystem::path>& output_override = {});

RunRecord run_algorithm(const ExperimentConfig& cfg, const ModelProblem& mp);

struct BenchEntry {
  std::string name;
  DenoiserSpec spec;
};

struct BenchConfig {
  std::size_t phantom_size = 64;
  std::vector<double> sigmas{0.0, 0.01, 0.05, 0.1};
  std::uint64_t seed = 1;
  std::vector<BenchEntry> denoisers;
  std::filesystem::path output_dir = "bench";
};

BenchConfig load_bench_config(const std::filesystem::path& path);

struct BenchRow {
  double sigma;
  std::string denoiser;
  double noisy_psnr, noisy_ssim, denoised_psnr, denoised_ssim;
};

std::vector<BenchRow> denoise_bench(const BenchConfig& cfg,
                                    const std::optional<std::filesystem::path>& output_override = {});

// CSV writers (comma separated, header row, LF endings).
void write_iterations_csv(const RunRecord& r, const std::filesystem::path& path);
void write_summary_csv(const RunRecord& r, const std::filesystem::path& path);
void write_curve_csv(const RunRecord& r, const std::filesystem::path& path, bool alpha);
std::string format_number(double v);

}  // namespace pnp
