#include "qsv/kernels.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "kernels_common.hpp"

namespace qsv {

std::size_t conv_output_length(std::size_t t, std::size_t k, int dilation, Padding padding) {
  if (padding == Padding::same) return t;
  const long span = static_cast<long>(dilation) * static_cast<long>(k - 1);
  const long out = static_cast<long>(t) - span;
  if (out < 1)
    throw Error("conv1d: output length " + std::to_string(out) + " < 1 (T=" + std::to_string(t) +
                ", dilation*(K-1)=" + std::to_string(span) + ")");
  return static_cast<std::size_t>(out);
}

Tensor conv1d(const Tensor& input, const Tensor& weight, const Tensor& bias, int dilation,
              Padding padding) {
  const auto g = detail::conv_geometry(input.shape(), weight.shape(), bias.shape(), dilation, padding);
  const auto x = input.f32();
  const auto w = weight.f32();
  const auto b = bias.f32();
  Tensor out({g.c_out, g.t_out});
  auto y = out.f32();
  const long t_in = static_cast<long>(g.t_in);
  const long t_out = static_cast<long>(g.t_out);
  const bool parallel = g.c_out * g.c_in * g.k * g.t_out >= detail::kParallelGrain;

#pragma omp parallel for schedule(static) if (parallel)
  for (long o = 0; o < static_cast<long>(g.c_out); ++o) {
    std::vector<double> acc(g.t_out, static_cast<double>(b[o]));
    for (std::size_t ci = 0; ci < g.c_in; ++ci) {
      const float* xr = x.data() + ci * g.t_in;
      const float* wr = w.data() + (o * g.c_in + ci) * g.k;
      for (std::size_t k = 0; k < g.k; ++k) {
        const long shift = static_cast<long>(k) * dilation - g.pad;
        const long t0 = std::max(0L, -shift);
        const long t1 = std::min(t_out, t_in - shift);
        const double wv = wr[k];
        for (long t = t0; t < t1; ++t) acc[t] += wv * static_cast<double>(xr[t + shift]);
      }
    }
    float* yr = y.data() + o * g.t_out;
    for (long t = 0; t < t_out; ++t) yr[t] = static_cast<float>(acc[t]);
  }
  return out;
}

Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  detail::check_linear(input.shape(), weight.shape(), bias.shape());
  const auto m = weight.dim(0);
  const auto n = weight.dim(1);
  const auto x = input.f32();
  const auto w = weight.f32();
  const auto b = bias.f32();
  Tensor out({m});
  auto y = out.f32();

#pragma omp parallel for schedule(static) if (m * n >= detail::kParallelGrain)
  for (long r = 0; r < static_cast<long>(m); ++r) {
    double acc = b[r];
    const float* wr = w.data() + r * n;
    for (std::size_t c = 0; c < n; ++c) acc += static_cast<double>(wr[c]) * x[c];
    y[r] = static_cast<float>(acc);
  }
  return out;
}

namespace {

template <typename F>
Tensor map_finite(const Tensor& x, const char* name, F f) {
  Tensor out(x.shape());
  const auto in = x.f32();
  auto y = out.f32();
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (std::isnan(in[i])) throw Error(std::string(name) + ": NaN input at index " + std::to_string(i));
    y[i] = f(in[i]);
  }
  return out;
}

void require_ct(const Tensor& x, const char* name) {
  if (x.rank() != 2) throw Error(std::string(name) + ": expected [C, T], got " + shape_str(x.shape()));
}

}  // namespace

Tensor relu(const Tensor& x) {
  return map_finite(x, "relu", [](float v) { return v > 0.0f ? v : 0.0f; });
}

Tensor sigmoid(const Tensor& x) {
  return map_finite(x, "sigmoid", [](float v) {
    return static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(v))));
  });
}

Tensor tanh(const Tensor& x) {
  return map_finite(x, "tanh", [](float v) { return static_cast<float>(std::tanh(static_cast<double>(v))); });
}

Tensor softmax_over_time(const Tensor& x) {
  require_ct(x, "softmax_over_time");
  require_finite(x, "softmax_over_time");
  const auto c = x.dim(0);
  const auto t = x.dim(1);
  Tensor out(x.shape());
  for (std::size_t ch = 0; ch < c; ++ch) {
    const auto in = x.row(ch);
    auto y = out.row(ch);
    double peak = in[0];
    for (auto v : in) peak = std::max(peak, static_cast<double>(v));
    double total = 0.0;
    std::vector<double> e(t);
    for (std::size_t i = 0; i < t; ++i) {
      e[i] = std::exp(static_cast<double>(in[i]) - peak);
      total += e[i];
    }
    for (std::size_t i = 0; i < t; ++i) y[i] = static_cast<float>(e[i] / total);
  }
  return out;
}

Tensor mean_std_pool(const Tensor& input) {
  require_ct(input, "mean_std_pool");
  const auto c = input.dim(0);
  const auto t = input.dim(1);
  Tensor out({2 * c});
  auto y = out.f32();
  for (std::size_t ch = 0; ch < c; ++ch) {
    const auto r = input.row(ch);
    double mean = 0.0;
    for (auto v : r) mean += v;
    mean /= static_cast<double>(t);
    double var = 0.0;
    for (auto v : r) var += (v - mean) * (v - mean);
    var /= static_cast<double>(t);
    y[ch] = static_cast<float>(mean);
    y[c + ch] = static_cast<float>(std::sqrt(var + kPoolEps));
  }
  return out;
}

Tensor concat_channels(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw Error("concat_channels: no inputs");
  std::size_t channels = 0;
  const auto t = parts.front().dim(1);
  for (const auto& p : parts) {
    require_ct(p, "concat_channels");
    if (p.dim(1) != t)
      throw Error("concat_channels: time length mismatch (" + std::to_string(p.dim(1)) + " vs " +
                  std::to_string(t) + ")");
    channels += p.dim(0);
  }
  std::vector<float> values;
  values.reserve(channels * t);
  for (const auto& p : parts) values.insert(values.end(), p.f32().begin(), p.f32().end());
  return Tensor({channels, t}, std::move(values));
}

Tensor channel_affine(const Tensor& x, const Tensor& scale, const Tensor& shift) {
  require_ct(x, "channel_affine");
  if (scale.numel() != x.dim(0) || shift.numel() != x.dim(0))
    throw Error("channel_affine: parameter length does not match channel count");
  Tensor out(x.shape());
  const auto s = scale.f32();
  const auto h = shift.f32();
  for (std::size_t c = 0; c < x.dim(0); ++c) {
    const auto in = x.row(c);
    auto y = out.row(c);
    for (std::size_t i = 0; i < in.size(); ++i) y[i] = s[c] * in[i] + h[c];
  }
  return out;
}

Tensor channel_scale(const Tensor& x, const Tensor& gate) {
  require_ct(x, "channel_scale");
  if (gate.numel() != x.dim(0)) throw Error("channel_scale: gate length does not match channel count");
  Tensor out(x.shape());
  const auto g = gate.f32();
  for (std::size_t c = 0; c < x.dim(0); ++c) {
    const auto in = x.row(c);
    auto y = out.row(c);
    for (std::size_t i = 0; i < in.size(); ++i) y[i] = in[i] * g[c];
  }
  return out;
}

Tensor time_mean(const Tensor& x) {
  require_ct(x, "time_mean");
  Tensor out({x.dim(0)});
  auto y = out.f32();
  for (std::size_t c = 0; c < x.dim(0); ++c) {
    double acc = 0.0;
    for (auto v : x.row(c)) acc += v;
    y[c] = static_cast<float>(acc / static_cast<double>(x.dim(1)));
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw Error("add: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  Tensor out(a.shape());
  const auto x = a.f32();
  const auto y = b.f32();
  auto z = out.f32();
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] + y[i];
  return out;
}

}  // namespace qsv
