#pragma once

#include <string>

#include "qsv/error.hpp"
#include "qsv/kernels.hpp"

namespace qsv::detail {

struct ConvGeometry {
  std::size_t c_in, c_out, k, t_in, t_out;
  long pad;
};

inline ConvGeometry conv_geometry(const Shape& input, const Shape& weight, const Shape& bias,
                                  int dilation, Padding padding) {
  if (input.size() != 2) throw Error("conv1d: input must be [C_in, T], got " + shape_str(input));
  if (weight.size() != 3)
    throw Error("conv1d: weight must be [C_out, C_in, K], got " + shape_str(weight));
  if (bias.size() != 1) throw Error("conv1d: bias must be [C_out], got " + shape_str(bias));
  if (dilation < 1) throw Error("conv1d: dilation must be >= 1");
  if (weight[1] != input[0])
    throw Error("conv1d: input channel axis mismatch (weight C_in " + std::to_string(weight[1]) +
                ", input C_in " + std::to_string(input[0]) + ")");
  if (bias[0] != weight[0])
    throw Error("conv1d: output channel axis mismatch (bias " + std::to_string(bias[0]) +
                ", weight C_out " + std::to_string(weight[0]) + ")");
  ConvGeometry g{input[0], weight[0], weight[2], input[1], 0, 0};
  if (padding == Padding::same) {
    if (g.k % 2 == 0) throw Error("conv1d: same padding needs an odd kernel size");
    g.pad = static_cast<long>(dilation) * static_cast<long>(g.k - 1) / 2;
  }
  g.t_out = conv_output_length(g.t_in, g.k, dilation, padding);
  return g;
}

inline void check_linear(const Shape& input, const Shape& weight, const Shape& bias) {
  if (input.size() != 1) throw Error("linear: input must be [N], got " + shape_str(input));
  if (weight.size() != 2) throw Error("linear: weight must be [M, N], got " + shape_str(weight));
  if (bias.size() != 1 || bias[0] != weight[0])
    throw Error("linear: bias length does not match weight rows");
  if (weight[1] != input[0])
    throw Error("linear: input length " + std::to_string(input[0]) + " does not match weight columns " +
                std::to_string(weight[1]));
}

/// Work (in multiply-adds) below which kernels stay single-threaded.
inline constexpr std::size_t kParallelGrain = 1 << 15;

}  // namespace qsv::detail
