// pnpct: command-line front end over the C interface.
//
//   pnpct run CONFIG... [--jobs N] [--output-dir DIR]
//   pnpct denoise-bench CONFIG [--output-dir DIR]
//   pnpct validate CONFIG...
//   pnpct phantom --size N --out FILE
//
// Exit codes: 0 success, 2 configuration error, 3 runtime failure.
#include <pnpct/pnpct.h>

#include <atomic>
#include <cstdio>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

int exit_code(pnpct_status s) {
  if (s == PNPCT_OK) return kExitOk;
  if (s == PNPCT_ERR_CONFIG || s == PNPCT_ERR_IO) return kExitConfig;
  return kExitRuntime;
}

std::mutex g_print;

int run_one(const std::string& path, const std::string& out_dir, bool multiple) {
  std::string dir = out_dir;
  // Several configs sharing one --output-dir each get their own subdirectory.
  if (!dir.empty() && multiple) {
    std::string stem = path.substr(path.find_last_of('/') + 1);
    stem = stem.substr(0, stem.find_last_of('.'));
    dir += "/" + stem;
  }
  pnpct_run* run = nullptr;
  const pnpct_status s = pnpct_run_config(path.c_str(), dir.empty() ? nullptr : dir.c_str(), &run);
  std::lock_guard lock(g_print);
  if (run) {
    pnpct_row row{};
    const size_t n = pnpct_run_rows(run);
    const size_t ks = pnpct_run_selected_k(run);
    for (size_t i = 0; i < n; ++i) {
      pnpct_run_row(run, i, &row);
      if (row.k == ks) break;
    }
    std::printf("%s: %zu iterations, stop=%s, selected k=%zu mse=%.6g psnr=%.4g ssim=%.4g -> %s\n",
                path.c_str(), n, pnpct_run_stop_reason(run), ks, row.mse, row.psnr, row.ssim,
                pnpct_run_output_dir(run));
    pnpct_run_destroy(run);
  }
  if (s != PNPCT_OK)
    std::fprintf(stderr, "%s: %s: %s\n", path.c_str(), pnpct_status_name(s), pnpct_last_error());
  return exit_code(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Plug-and-play CT reconstruction experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(pnpct_version()));

  std::vector<std::string> run_configs;
  std::string out_dir;
  unsigned jobs = 1;
  auto* run = app.add_subcommand("run", "run experiment configs and write their artifacts");
  run->add_option("configs", run_configs, "JSON config files")->required()->check(CLI::ExistingFile);
  run->add_option("-j,--jobs", jobs, "configs to run concurrently")->check(CLI::PositiveNumber);
  run->add_option("-o,--output-dir", out_dir, "override the output directory");

  std::string bench_config, bench_out;
  auto* bench = app.add_subcommand("denoise-bench", "score denoisers on the noisy phantom");
  bench->add_option("config", bench_config, "JSON bench config")->required()->check(CLI::ExistingFile);
  bench->add_option("-o,--output-dir", bench_out, "override the output directory");

  std::vector<std::string> validate_configs;
  auto* validate = app.add_subcommand("validate", "check config files without running them");
  validate->add_option("configs", validate_configs, "JSON config files")->required();

  std::size_t size = 256;
  std::string phantom_out;
  auto* phantom = app.add_subcommand("phantom", "write the Shepp-Logan phantom");
  phantom->add_option("-n,--size", size, "image side length")->check(CLI::Range(16, 8192));
  phantom->add_option("--out", phantom_out, "output file (.pgm or .raw)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  if (*run) {
    std::atomic<std::size_t> next{0};
    std::atomic<int> worst{kExitOk};
    const bool multiple = run_configs.size() > 1;
    auto worker = [&] {
      for (std::size_t i = next++; i < run_configs.size(); i = next++) {
        const int rc = run_one(run_configs[i], out_dir, multiple);
        int cur = worst.load();
        while (rc > cur && !worst.compare_exchange_weak(cur, rc)) {
        }
      }
    };
    std::vector<std::jthread> pool;
    const std::size_t n = std::min<std::size_t>(jobs, run_configs.size());
    for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
    pool.clear();
    return worst.load();
  }

  if (*bench) {
    const pnpct_status s =
        pnpct_denoise_bench(bench_config.c_str(), bench_out.empty() ? nullptr : bench_out.c_str());
    if (s != PNPCT_OK)
      std::fprintf(stderr, "%s: %s: %s\n", bench_config.c_str(), pnpct_status_name(s),
                   pnpct_last_error());
    return exit_code(s);
  }

  if (*validate) {
    int rc = kExitOk;
    for (const auto& path : validate_configs) {
      std::vector<char> report(1 << 16);
      const pnpct_status s = pnpct_config_validate(path.c_str(), report.data(), report.size());
      if (s == PNPCT_OK) {
        std::printf("%s: ok\n", path.c_str());
        continue;
      }
      std::string text(report.data());
      std::size_t pos = 0;
      while (pos < text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::fprintf(stderr, "%s: %s\n", path.c_str(), text.substr(pos, nl - pos).c_str());
        pos = nl == std::string::npos ? text.size() : nl + 1;
      }
      rc = std::max(rc, exit_code(s));
    }
    return rc;
  }

  if (*phantom) {
    pnpct_image* img = nullptr;
    pnpct_status s = pnpct_shepp_logan(size, &img);
    if (s == PNPCT_OK) s = pnpct_image_write(img, phantom_out.c_str());
    pnpct_image_destroy(img);
    if (s != PNPCT_OK) std::fprintf(stderr, "phantom: %s\n", pnpct_last_error());
    return s == PNPCT_OK ? kExitOk : kExitRuntime;
  }
  return kExitOk;
}
