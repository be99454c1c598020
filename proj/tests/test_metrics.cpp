#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "ttcast/metrics.hpp"

using namespace ttcast;

namespace {

std::vector<double> random_frame(std::size_t n, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

}  // namespace

TEST_CASE("mse basics") {
  CHECK(metrics::mse({1.f, 2.f}, {1.f, 2.f}) == 0.0);
  CHECK(metrics::mse({1.f, 3.f}, {2.f, 1.f}) == doctest::Approx((1.0 + 4.0) / 2.0));
  auto per = metrics::mse_per_frame({0.f, 0.f, 3.f, 4.f}, {0.f, 0.f, 0.f, 0.f}, 2);
  CHECK(per[0] == 0.0);
  CHECK(per[1] == doctest::Approx((9.0 + 16.0) / 2.0));
}

TEST_CASE("ssim(a,a) is exactly one") {
  for (std::uint32_t seed : {1u, 2u, 3u}) {
    auto a = random_frame(16 * 16, seed);
    CHECK(metrics::ssim(a, a, 16, 16, 1.0) == 1.0);
  }
  // also on frames smaller than the 11-point window
  auto s = random_frame(5 * 5, 4);
  bool shrunk = false;
  CHECK(metrics::ssim(s, s, 5, 5, 1.0, &shrunk) == 1.0);
  CHECK(shrunk);
}

TEST_CASE("ssim symmetry") {
  auto a = random_frame(16 * 16, 5);
  auto b = random_frame(16 * 16, 6);
  CHECK(std::abs(metrics::ssim(a, b, 16, 16, 1.0) - metrics::ssim(b, a, 16, 16, 1.0)) < 1e-10);
}

TEST_CASE("ssim bounded and monotone under noise") {
  auto a = random_frame(16 * 16, 7);
  auto b = a;
  std::mt19937 rng(8);
  std::normal_distribution<double> n(0.0, 0.05);
  for (double& v : b) v += n(rng);
  const double s1 = metrics::ssim(a, b, 16, 16, 1.0);
  for (double& v : b) v += n(rng) * 4.0;
  const double s2 = metrics::ssim(a, b, 16, 16, 1.0);
  CHECK(s1 <= 1.0);
  CHECK(s2 < s1);
  CHECK(s2 > -1.0);
}

TEST_CASE("ssim constant frames match the closed form") {
  // For constants mu_a, mu_b with zero variance:
  // ssim = (2 mu_a mu_b + C1) / (mu_a² + mu_b² + C1)   (second factor is 1)
  const double L = 1.0, C1 = (0.01 * L) * (0.01 * L);
  const double ma = 0.3, mb = 0.7;
  std::vector<double> a(16 * 16, ma), b(16 * 16, mb);
  const double want = (2 * ma * mb + C1) / (ma * ma + mb * mb + C1);
  CHECK(std::abs(metrics::ssim(a, b, 16, 16, L) - want) < 1e-10);
  // equal constants: exactly 1
  CHECK(metrics::ssim(a, a, 16, 16, L) == 1.0);
}

TEST_CASE("evaluate: identical series gives zero mse, unit ssim, and a clean CSV") {
  eof::PcSequence s;
  s.frames = 3;
  s.depths = 4;
  s.components = 6;
  s.channels = 2;
  std::mt19937 rng(9);
  std::uniform_real_distribution<float> d(-1.f, 1.f);
  s.values.resize(s.size());
  for (float& v : s.values) v = d(rng);

  auto report = metrics::evaluate(s, s, nullptr);
  CHECK(report.horizon == 3);
  REQUIRE(report.pc_mse.size() == 3);
  for (double v : report.pc_mse) CHECK(v == 0.0);
  for (double v : report.pc_ssim) CHECK(v == 1.0);
  CHECK(report.phys_mse.empty());

  const std::string path =
      (std::filesystem::temp_directory_path() / "report.csv").string();
  metrics::write_report_csv(report, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "frame,space,mse,ssim");
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++rows;
    CHECK(line.find(",pc,") != std::string::npos);
    // ssim column is 1 for identical inputs
    CHECK(line.substr(line.rfind(',') + 1) == "1");
  }
  CHECK(rows == 3);
  std::remove(path.c_str());
}

TEST_CASE("evaluate: mismatched shapes rejected") {
  eof::PcSequence a, b;
  a.frames = b.frames = 2;
  a.depths = b.depths = 2;
  a.components = 3;
  b.components = 4;
  a.channels = b.channels = 1;
  a.values.resize(a.size());
  b.values.resize(b.size());
  CHECK_THROWS_AS(metrics::evaluate(a, b, nullptr), ShapeError);
}
