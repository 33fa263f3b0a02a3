#include <atomic>
#include <vector>

#include "kernels_common.hpp"
#include "qkernels_common.hpp"

namespace qsv {

Tensor qlinear(const QuantizedTensor& x, const QuantizedTensor& w, const Tensor& bias) {
  detail::check_linear(x.values.shape(), w.values.shape(), bias.shape());
  detail::check_activation(x, "qlinear");
  detail::check_weight(w, "qlinear");
  const auto m = w.values.dim(0);
  const auto n = w.values.dim(1);
  const auto wq = w.values.i8();
  const auto b = bias.f32();
  const float sx = x.params.scale();

  std::vector<std::int32_t> xs(n);
  for (std::size_t i = 0; i < n; ++i)
    xs[i] = detail::shifted_activation(x.values.i8()[i], x.params.zero_point());

  Tensor out({m});
  auto y = out.f32();
  std::atomic<bool> overflowed{false};

#pragma omp parallel for schedule(static) if (m * n >= detail::kParallelGrain)
  for (long r = 0; r < static_cast<long>(m); ++r) {
    std::int32_t acc = 0;
    const std::int8_t* wr = wq.data() + r * n;
    bool ok = true;
    for (std::size_t c = 0; c < n && ok; ++c) ok = detail::mac_checked(acc, xs[c], wr[c]);
    if (!ok) {
      overflowed = true;
      continue;
    }
    y[r] = detail::rescale(acc, sx, detail::weight_scale(w.params, r), b[r]);
  }
  if (overflowed) detail::overflow("qlinear");
  return out;
}

Tensor qconv1d(const QuantizedTensor& x, const QuantizedTensor& w, const Tensor& bias, int dilation,
               Padding padding) {
  const auto g =
      detail::conv_geometry(x.values.shape(), w.values.shape(), bias.shape(), dilation, padding);
  detail::check_activation(x, "qconv1d");
  detail::check_weight(w, "qconv1d");
  const auto wq = w.values.i8();
  const auto b = bias.f32();
  const float sx = x.params.scale();
  const auto zp = x.params.zero_point();

  std::vector<std::int32_t> xs(x.values.numel());
  for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = detail::shifted_activation(x.values.i8()[i], zp);

  Tensor out({g.c_out, g.t_out});
  auto y = out.f32();
  const long t_in = static_cast<long>(g.t_in);
  const long t_out = static_cast<long>(g.t_out);
  std::atomic<bool> overflowed{false};
  const bool parallel = g.c_out * g.c_in * g.k * g.t_out >= detail::kParallelGrain;

#pragma omp parallel for schedule(static) if (parallel)
  for (long o = 0; o < static_cast<long>(g.c_out); ++o) {
    std::vector<std::int32_t> acc(g.t_out, 0);
    bool ok = true;
    for (std::size_t ci = 0; ci < g.c_in && ok; ++ci) {
      const std::int32_t* xr = xs.data() + ci * g.t_in;
      const std::int8_t* wr = wq.data() + (o * g.c_in + ci) * g.k;
      for (std::size_t k = 0; k < g.k && ok; ++k) {
        const long shift = static_cast<long>(k) * dilation - g.pad;
        const long t0 = std::max(0L, -shift);
        const long t1 = std::min(t_out, t_in - shift);
        const std::int32_t wv = wr[k];
        for (long t = t0; t < t1 && ok; ++t) ok = detail::mac_checked(acc[t], xr[t + shift], wv);
      }
    }
    if (!ok) {
      overflowed = true;
      continue;
    }
    const float sw = detail::weight_scale(w.params, o);
    float* yr = y.data() + o * g.t_out;
    for (long t = 0; t < t_out; ++t) yr[t] = detail::rescale(acc[t], sx, sw, b[o]);
  }
  if (overflowed) detail::overflow("qconv1d");
  return out;
}

}  // namespace qsv
