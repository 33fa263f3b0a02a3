#pragma once

#include <cstdint>
#include <vector>

#include "qsv/kernels.hpp"
#include "qsv/tensor.hpp"

namespace qsv {

struct CalibStats;

enum class Granularity { per_tensor, per_channel };
enum class Scheme { affine, symmetric };

/// Affine map between reals and an integer grid:
///   q = clamp(round_half_even(x / scale - zero_point), qmin, qmax)
///   x = scale * (q + zero_point)
/// so real zero sits at q = -zero_point. Per-channel params carry one
/// (scale, zero_point) pair per slice along `axis`.
struct QuantParams {
  std::vector<float> scales;
  std::vector<std::int32_t> zero_points;
  std::int32_t qmin = -128;
  std::int32_t qmax = 127;
  Granularity granularity = Granularity::per_tensor;
  std::size_t axis = 0;

  static QuantParams per_tensor(float scale, std::int32_t zero_point);
  static QuantParams per_channel(std::vector<float> scales, std::vector<std::int32_t> zero_points,
                                 std::size_t axis = 0);

  std::size_t channels() const noexcept { return scales.size(); }
  float scale(std::size_t channel = 0) const { return scales.at(channel); }
  std::int32_t zero_point(std::size_t channel = 0) const { return zero_points.at(channel); }
  bool is_symmetric() const;

  /// Throws unless scales are positive and finite, qmin < qmax within int8,
  /// and per-channel vectors agree in length.
  void validate() const;

  bool operator==(const QuantParams&) const = default;
};

struct QuantizedTensor {
  Tensor values;  // i8 payload
  QuantParams params;

  bool operator==(const QuantizedTensor&) const = default;
};

/// Round half to even, independent of the current floating-point environment.
double round_half_even(double v);

QuantizedTensor quantize(const Tensor& x, const QuantParams& params);
Tensor dequantize(const QuantizedTensor& q);
Tensor fake_quant(const Tensor& x, const QuantParams& params);

/// Scalar forms of the two maps, used by the tensor versions.
std::int32_t quantize_value(float x, float scale, std::int32_t zero_point, std::int32_t qmin,
                            std::int32_t qmax);
float dequantize_value(std::int32_t q, float scale, std::int32_t zero_point);

/// Maps the real interval [lo, hi] onto the int8 grid.
///   affine:    scale = (hi - lo) / (qmax - qmin), zero_point = round(lo / scale - qmin)
///   symmetric: scale = max(|lo|, |hi|) / qmax,    zero_point = 0
/// A range that is exactly zero gives scale 1, zero point 0.
QuantParams compute_params(double lo, double hi, Scheme scheme, int bits = 8);
QuantParams compute_params(const CalibStats& stats, Scheme scheme, int bits = 8);

/// Symmetric per-output-channel weight quantization (axis 0).
QuantizedTensor quantize_weight(const Tensor& weight);

// Integer kernels. Activations must be per-tensor, weights symmetric with one
// scale per output channel. Products accumulate in checked int32; overflow
// raises Error. Output is scale_x * scale_w[m] * acc + bias[m] in f32.
Tensor qlinear(const QuantizedTensor& x, const QuantizedTensor& w, const Tensor& bias);
/// Padded positions stand for real 0, i.e. q = -zero_point.
Tensor qconv1d(const QuantizedTensor& x, const QuantizedTensor& w, const Tensor& bias, int dilation,
               Padding padding);

namespace ref {

Tensor qlinear(const QuantizedTensor& x, const QuantizedTensor& w, const Tensor& bias);
Tensor qconv1d(const QuantizedTensor& x, const QuantizedTensor& w, const Tensor& bias, int dilation,
               Padding padding);

}  // namespace ref

}  // namespace qsv
