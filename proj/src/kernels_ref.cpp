#include "kernels_common.hpp"

namespace qsv::ref {

Tensor conv1d(const Tensor& input, const Tensor& weight, const Tensor& bias, int dilation,
              Padding padding) {
  const auto g = detail::conv_geometry(input.shape(), weight.shape(), bias.shape(), dilation, padding);
  const auto x = input.f32();
  const auto w = weight.f32();
  const auto b = bias.f32();
  Tensor out({g.c_out, g.t_out});
  auto y = out.f32();
  for (std::size_t o = 0; o < g.c_out; ++o) {
    for (std::size_t t = 0; t < g.t_out; ++t) {
      double acc = b[o];
      for (std::size_t ci = 0; ci < g.c_in; ++ci) {
        for (std::size_t k = 0; k < g.k; ++k) {
          const long src = static_cast<long>(t) + static_cast<long>(k) * dilation - g.pad;
          if (src < 0 || src >= static_cast<long>(g.t_in)) continue;
          acc += static_cast<double>(w[(o * g.c_in + ci) * g.k + k]) * x[ci * g.t_in + src];
        }
      }
      y[o * g.t_out + t] = static_cast<float>(acc);
    }
  }
  return out;
}

Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  detail::check_linear(input.shape(), weight.shape(), bias.shape());
  const auto m = weight.dim(0);
  const auto n = weight.dim(1);
  Tensor out({m});
  auto y = out.f32();
  for (std::size_t r = 0; r < m; ++r) {
    double acc = bias.f32()[r];
    for (std::size_t c = 0; c < n; ++c)
      acc += static_cast<double>(weight.f32()[r * n + c]) * input.f32()[c];
    y[r] = static_cast<float>(acc);
  }
  return out;
}

}  // namespace qsv::ref
