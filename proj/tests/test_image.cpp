#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "error.hpp"
#include "image.hpp"
#include "oracles.hpp"

using namespace pnp;
namespace fs = std::filesystem;

namespace {
fs::path tmp_dir() {
  auto d = fs::temp_directory_path() / "pnpct_test_image";
  fs::create_directories(d);
  return d;
}
}  // namespace

TEST_CASE("image construction and access") {
  Image img(3, 2, 0.5);
  CHECK(img.size() == 6);
  img.at(1, 2) = 4.0;
  CHECK(img.vec()[5] == 4.0);
  CHECK_THROWS_AS(Image(2, 2, Vector(3)), Error);
}

TEST_CASE("vector helpers") {
  const Vector a{3, 4}, b{1, 1};
  CHECK(norm2(a) == 5.0);
  CHECK(dot(a, b) == 7.0);
  CHECK(sub(a, b) == Vector{2, 3});
  Vector y = b;
  axpy(2.0, a, y);
  CHECK(y == Vector{7, 9});
  CHECK(all_finite(a));
  CHECK_FALSE(all_finite(Vector{1, std::nan("")}));
}

TEST_CASE("PGM round trip quantises to 16 bits and clips") {
  std::mt19937_64 rng(4);
  Image img(5, 3, oracle::random_vector(15, rng, -0.2, 1.2));
  const auto path = (tmp_dir() / "a.pgm").string();
  write_pgm(img, path);
  const Image back = read_pgm(path);
  REQUIRE(back.width() == 5);
  REQUIRE(back.height() == 3);
  for (std::size_t i = 0; i < 15; ++i) {
    const double v = std::min(1.0, std::max(0.0, img.vec()[i]));
    CHECK(std::abs(back.vec()[i] - v) <= 0.5 / 65535 + 1e-15);
  }
  std::ifstream in(path, std::ios::binary);
  std::string magic;
  in >> magic;
  CHECK(magic == "P5");
}

TEST_CASE("raw round trip is exact and writes a sidecar") {
  std::mt19937_64 rng(6);
  Image img(4, 7, oracle::random_vector(28, rng));
  const auto path = (tmp_dir() / "b.raw").string();
  write_raw(img, path);
  CHECK(read_raw_image(path) == img);
  CHECK(fs::file_size(path) == 28 * sizeof(double));
  std::ifstream side(path + ".json");
  const auto meta = nlohmann::json::parse(side);
  CHECK(meta["width"] == 4);
  CHECK(meta["height"] == 7);
  CHECK(meta["dtype"] == "float64le");

  Sinogram s(3, 2, oracle::random_vector(6, rng));
  const auto spath = (tmp_dir() / "s.raw").string();
  write_raw(s, spath);
  CHECK(read_raw_sinogram(spath) == s);
  CHECK_THROWS_AS(read_raw_image(spath), Error);
}

TEST_CASE("reading missing or corrupt files fails cleanly") {
  CHECK_THROWS_AS(read_pgm((tmp_dir() / "missing.pgm").string()), Error);
  const auto path = (tmp_dir() / "bad.pgm").string();
  std::ofstream(path) << "P2 3 3 255\n";
  CHECK_THROWS_AS(read_pgm(path), Error);
}
