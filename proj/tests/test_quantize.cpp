#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>

#include "forge/error.hpp"
#include "forge/quantize.hpp"
#include "forge/rng.hpp"

using namespace forge;
using namespace forge::quant;

namespace {

// Positive E4M3 values built from the format definition: subnormals m/8 * 2^-6,
// normals (1 + m/8) * 2^(e-7), excluding the all-ones NaN pattern.
std::vector<double> grid() {
  std::vector<double> g;
  for (int m = 0; m < 8; ++m) g.push_back(m / 8.0 / 64.0);
  for (int e = 1; e <= 15; ++e)
    for (int m = 0; m < 8; ++m) {
      if (e == 15 && m == 7) continue;
      g.push_back((1.0 + m / 8.0) * std::pow(2.0, e - 7));
    }
  return g;
}

// Nearest grid value by linear scan, ties to the even index.
double nearest(double a) {
  const auto g = grid();
  std::size_t best = 0;
  for (std::size_t i = 1; i < g.size(); ++i) {
    const double d = std::fabs(g[i] - a), db = std::fabs(g[best] - a);
    if (d < db || (d == db && i % 2 == 0)) best = i;
  }
  return g[best];
}

}  // namespace

TEST_CASE("decode covers the grid") {
  const auto g = grid();
  REQUIRE(g.size() == 127);
  CHECK(g.back() == kGridMax);
  for (std::size_t c = 0; c < g.size(); ++c) {
    CHECK(decode_e4m3(static_cast<std::uint8_t>(c)) == g[c]);
    CHECK(decode_e4m3(static_cast<std::uint8_t>(c | 0x80)) == -g[c]);
    CHECK(encode_e4m3(g[c]) == c);
  }
}

TEST_CASE("encode rounds to the nearest grid point") {
  Rng rng(5);
  for (int i = 0; i < 20000; ++i) {
    const double a = std::ldexp(rng.uniform(), static_cast<int>(rng.below(16)) - 8);
    CHECK(decode_e4m3(encode_e4m3(a)) == nearest(a));
    CHECK(decode_e4m3(encode_e4m3(-a)) == -nearest(a));
  }
  CHECK(decode_e4m3(encode_e4m3(1e9)) == kGridMax);
  CHECK(decode_e4m3(encode_e4m3(-1e9)) == -kGridMax);
  // Midpoint between 1.0 (even) and 1.125 rounds to 1.0.
  CHECK(decode_e4m3(encode_e4m3(1.0625)) == 1.0);
}

TEST_CASE("zero block") {
  const std::vector<double> zeros(16, 0.0);
  const auto q = quantize_blockwise(zeros, 8);
  CHECK(q.scales == std::vector<double>{0.0, 0.0});
  CHECK(dequantize(q) == zeros);
}

TEST_CASE("block scales put the largest magnitude on the grid maximum") {
  const std::vector<double> x{0.5, -2.0, 1.0, 0.25, 3.0};
  const auto q = quantize_blockwise(x, 4);
  REQUIRE(q.scales.size() == 2);
  CHECK(q.scales[0] == 2.0 / kGridMax);
  CHECK(q.scales[1] == 3.0 / kGridMax);
  const auto d = dequantize(q);
  CHECK(d[1] == doctest::Approx(-2.0).epsilon(1e-15));
  CHECK(d[4] == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("values already on the scaled grid are exact") {
  Rng rng(6);
  const auto g = grid();
  for (int block = 0; block < 200; ++block) {
    const double scale = std::ldexp(1.0, static_cast<int>(rng.below(20)) - 10);
    std::vector<double> x{kGridMax * scale};
    for (int i = 0; i < 31; ++i) x.push_back((rng.bernoulli(0.5) ? -1 : 1) * g[rng.below(g.size())] * scale);
    CHECK(dequantize(quantize_blockwise(x, 32)) == x);
  }
}

TEST_CASE("quantization is idempotent") {
  Rng rng(7);
  for (int block = 0; block < 10000; ++block) {
    std::vector<double> x(1 + rng.below(64));
    const double spread = std::ldexp(1.0, static_cast<int>(rng.below(12)) - 6);
    for (auto& v : x) v = (2.0 * rng.uniform() - 1.0) * spread;
    const auto q = quantize_blockwise(x, 16);
    const auto q2 = quantize_blockwise(dequantize(q), 16);
    CHECK(q2.codes == q.codes);
    const auto d = dequantize(q);
    CHECK(dequantize(q2) == d);
  }
}

TEST_CASE("invalid inputs") {
  const std::vector<double> x{1.0, std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_AS(quantize_blockwise(x, 2), DomainError);
  CHECK_THROWS_AS(quantize_blockwise(std::vector<double>{1.0}, 0), DomainError);
}
