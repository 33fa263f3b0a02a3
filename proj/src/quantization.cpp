#include "qsv/quantization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qsv/calibration.hpp"
#include "qsv/error.hpp"

namespace qsv {

QuantParams QuantParams::per_tensor(float scale, std::int32_t zero_point) {
  QuantParams p;
  p.scales = {scale};
  p.zero_points = {zero_point};
  p.validate();
  return p;
}

QuantParams QuantParams::per_channel(std::vector<float> scales, std::vector<std::int32_t> zero_points,
                                     std::size_t axis) {
  QuantParams p;
  p.scales = std::move(scales);
  p.zero_points = std::move(zero_points);
  p.granularity = Granularity::per_channel;
  p.axis = axis;
  p.validate();
  return p;
}

bool QuantParams::is_symmetric() const {
  return std::all_of(zero_points.begin(), zero_points.end(), [](auto z) { return z == 0; });
}

void QuantParams::validate() const {
  if (scales.empty()) throw Error("quant params: no scales");
  if (scales.size() != zero_points.size())
    throw Error("quant params: scales and zero points differ in length");
  if (granularity == Granularity::per_tensor && scales.size() != 1)
    throw Error("quant params: per-tensor params must hold exactly one scale");
  for (auto s : scales)
    if (!(s > 0.0f) || !std::isfinite(s)) throw Error("quant params: scale must be positive and finite");
  if (qmin >= qmax) throw Error("quant params: qmin must be below qmax");
  if (qmin < -128 || qmax > 127) throw Error("quant params: range exceeds int8 storage");
}

double round_half_even(double v) {
  const double fl = std::floor(v);
  const double diff = v - fl;
  if (diff > 0.5) return fl + 1.0;
  if (diff < 0.5) return fl;
  return std::fmod(fl, 2.0) == 0.0 ? fl : fl + 1.0;
}

std::int32_t quantize_value(float x, float scale, std::int32_t zero_point, std::int32_t qmin,
                            std::int32_t qmax) {
  const double v = static_cast<double>(x) / static_cast<double>(scale) - zero_point;
  const double r = round_half_even(v);
  if (r <= qmin) return qmin;
  if (r >= qmax) return qmax;
  return static_cast<std::int32_t>(r);
}

float dequantize_value(std::int32_t q, float scale, std::int32_t zero_point) {
  return static_cast<float>(static_cast<double>(scale) *
                            (static_cast<double>(q) + static_cast<double>(zero_point)));
}

namespace {

/// Channel index of each flat element for per-channel params.
struct ChannelIndexer {
  std::size_t inner = 1;
  std::size_t extent = 1;
  bool per_channel = false;

  ChannelIndexer(const Shape& shape, const QuantParams& p) {
    if (p.granularity == Granularity::per_tensor) return;
    if (p.axis >= shape.size()) throw Error("quant params: channel axis out of range");
    if (shape[p.axis] != p.channels())
      throw Error("quant params: " + std::to_string(p.channels()) + " channels but tensor axis has " +
                  std::to_string(shape[p.axis]));
    per_channel = true;
    extent = shape[p.axis];
    for (std::size_t a = p.axis + 1; a < shape.size(); ++a) inner *= shape[a];
  }

  std::size_t operator()(std::size_t flat) const { return per_channel ? (flat / inner) % extent : 0; }
};

}  // namespace

QuantizedTensor quantize(const Tensor& x, const QuantParams& params) {
  params.validate();
  const auto in = x.f32();
  const ChannelIndexer channel(x.shape(), params);
  std::vector<std::int8_t> values(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (!std::isfinite(in[i])) throw Error("quantize: non-finite value at index " + std::to_string(i));
    const auto c = channel(i);
    values[i] = static_cast<std::int8_t>(
        quantize_value(in[i], params.scales[c], params.zero_points[c], params.qmin, params.qmax));
  }
  return {Tensor(x.shape(), std::move(values)), params};
}

Tensor dequantize(const QuantizedTensor& q) {
  const auto in = q.values.i8();
  const ChannelIndexer channel(q.values.shape(), q.params);
  std::vector<float> values(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    const auto c = channel(i);
    values[i] = dequantize_value(in[i], q.params.scales[c], q.params.zero_points[c]);
  }
  return Tensor(q.values.shape(), std::move(values));
}

Tensor fake_quant(const Tensor& x, const QuantParams& params) { return dequantize(quantize(x, params)); }

QuantParams compute_params(double lo, double hi, Scheme scheme, int bits) {
  if (bits != 8) throw Error("compute_params: only 8-bit quantization is supported");
  if (!std::isfinite(lo) || !std::isfinite(hi)) throw Error("compute_params: non-finite range");
  if (lo > hi) throw Error("compute_params: range lower bound exceeds upper bound");
  constexpr std::int32_t qmin = -128;
  constexpr std::int32_t qmax = 127;
  const double absmax = std::max(std::fabs(lo), std::fabs(hi));
  if (absmax == 0.0) return QuantParams::per_tensor(1.0f, 0);

  if (scheme == Scheme::symmetric)
    return QuantParams::per_tensor(static_cast<float>(absmax / qmax), 0);

  // A collapsed nonzero range keeps its value on the grid edge.
  const double scale = lo == hi ? absmax / qmax : (hi - lo) / (qmax - qmin);
  const float c = static_cast<float>(scale);
  if (!(c > 0.0f) || !std::isfinite(c)) throw Error("compute_params: range too narrow for f32 scale");
  const double d = round_half_even(lo / static_cast<double>(c) - qmin);
  if (std::fabs(d) > std::numeric_limits<std::int32_t>::max() / 2)
    throw Error("compute_params: zero point out of int32 range");
  return QuantParams::per_tensor(c, static_cast<std::int32_t>(d));
}

QuantParams compute_params(const CalibStats& stats, Scheme scheme, int bits) {
  if (stats.count == 0) throw Error("compute_params: stats '" + stats.name + "' have no observations");
  return compute_params(stats.min, stats.max, scheme, bits);
}

QuantizedTensor quantize_weight(const Tensor& weight) {
  const auto channels = weight.dim(0);
  const auto per = weight.numel() / channels;
  const auto w = weight.f32();
  std::vector<float> scales(channels);
  std::vector<std::int32_t> zps(channels, 0);
  for (std::size_t c = 0; c < channels; ++c) {
    double absmax = 0.0;
    for (std::size_t i = 0; i < per; ++i) {
      const float v = w[c * per + i];
      if (!std::isfinite(v)) throw Error("quantize_weight: non-finite weight");
      absmax = std::max(absmax, static_cast<double>(std::fabs(v)));
    }
    scales[c] = compute_params(-absmax, absmax, Scheme::symmetric).scale();
  }
  return quantize(weight, QuantParams::per_channel(std::move(scales), std::move(zps), 0));
}

}  // namespace qsv
