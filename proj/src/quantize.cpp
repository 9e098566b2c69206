#include "forge/quantize.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "forge/error.hpp"

namespace forge::quant {

namespace {

constexpr std::uint8_t kSignBit = 0x80;
constexpr std::uint8_t kMaxCode = 0x7E;  // 0x7F is NaN in E4M3

double magnitude(std::uint8_t bits) {
  const int exponent = (bits >> 3) & 0xF;
  const int mantissa = bits & 0x7;
  if (exponent == 0) return std::ldexp(mantissa / 8.0, -6);
  return std::ldexp(1.0 + mantissa / 8.0, exponent - 7);
}

const std::array<double, kMaxCode + 1>& magnitudes() {
  static const auto table = [] {
    std::array<double, kMaxCode + 1> t{};
    for (std::uint8_t c = 0; c <= kMaxCode; ++c) t[c] = magnitude(c);
    return t;
  }();
  return table;
}

}  // namespace

double decode_e4m3(std::uint8_t code) {
  const double m = magnitudes()[std::min<std::uint8_t>(code & 0x7F, kMaxCode)];
  return (code & kSignBit) ? -m : m;
}

std::uint8_t encode_e4m3(double value) {
  const auto& table = magnitudes();
  const double a = std::fabs(value);
  std::uint8_t code;
  if (a >= kGridMax) {
    code = kMaxCode;
  } else {
    const auto hi = static_cast<std::uint8_t>(std::upper_bound(table.begin(), table.end(), a) - table.begin());
    const auto lo = static_cast<std::uint8_t>(hi - 1);
    const double below = a - table[lo];
    const double above = table[hi] - a;
    if (below < above) code = lo;
    else if (above < below) code = hi;
    else code = (lo % 2 == 0) ? lo : hi;
  }
  if (code == 0) return 0;
  return std::signbit(value) ? static_cast<std::uint8_t>(code | kSignBit) : code;
}

QuantizedParams quantize_blockwise(std::span<const double> params, std::size_t block_size) {
  if (block_size == 0) throw DomainError("block size must be at least 1");
  QuantizedParams q;
  q.block_size = block_size;
  q.count = params.size();
  q.codes.resize(params.size());
  for (std::size_t start = 0; start < params.size(); start += block_size) {
    const auto block = params.subspan(start, std::min(block_size, params.size() - start));
    double top = 0.0;
    for (double x : block) {
      if (!std::isfinite(x)) throw DomainError("cannot quantize a non-finite parameter");
      top = std::max(top, std::fabs(x));
    }
    const double scale = top / kGridMax;
    q.scales.push_back(scale);
    for (std::size_t i = 0; i < block.size(); ++i)
      q.codes[start + i] = scale > 0.0 ? encode_e4m3(block[i] / scale) : std::uint8_t{0};
  }
  return q;
}

std::vector<double> dequantize(const QuantizedParams& q) {
  std::vector<double> out(q.count);
  for (std::size_t i = 0; i < q.count; ++i) out[i] = decode_e4m3(q.codes[i]) * q.scales[i / q.block_size];
  return out;
}

}  // namespace forge::quant
