#pragma once

// Block-wise 8-bit floating point quantization on an E4M3 grid (4 exponent
// bits with bias 7, 3 mantissa bits, largest finite magnitude 448, no
// infinities). Each block of B parameters shares one scale chosen so that the
// block's largest magnitude lands on 448.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace forge::quant {

inline constexpr double kGridMax = 448.0;

/// Magnitude of a code's low seven bits; bit 7 is the sign.
double decode_e4m3(std::uint8_t code);

/// Nearest grid value (ties to even mantissa), saturating at +-448.
std::uint8_t encode_e4m3(double value);

struct QuantizedParams {
  std::size_t block_size = 0;
  std::size_t count = 0;
  std::vector<double> scales;
  std::vector<std::uint8_t> codes;

  friend bool operator==(const QuantizedParams&, const QuantizedParams&) = default;
};

/// Throws DomainError when block_size is 0 or a parameter is not finite.
QuantizedParams quantize_blockwise(std::span<const double> params, std::size_t block_size);

std::vector<double> dequantize(const QuantizedParams& q);

}  // namespace forge::quant
