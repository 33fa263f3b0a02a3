#include "kernels_common.hpp"
#include "qkernels_common.hpp"

namespace qsv::ref {

Tensor qlinear(const QuantizedTensor& x, const QuantizedTensor& w, const Tensor& bias) {
  detail::check_linear(x.values.shape(), w.values.shape(), bias.shape());
  detail::check_activation(x, "qlinear");
  detail::check_weight(w, "qlinear");
  const auto m = w.values.dim(0);
  const auto n = w.values.dim(1);
  Tensor out({m});
  for (std::size_t r = 0; r < m; ++r) {
    std::int32_t acc = 0;
    for (std::size_t c = 0; c < n; ++c) {
      const auto xv = detail::shifted_activation(x.values.i8()[c], x.params.zero_point());
      if (!detail::mac_checked(acc, xv, w.values.i8()[r * n + c])) detail::overflow("qlinear");
    }
    out.f32()[r] = detail::rescale(acc, x.params.scale(), detail::weight_scale(w.params, r), bias.f32()[r]);
  }
  return out;
}

Tensor qconv1d(const QuantizedTensor& x, const QuantizedTensor& w, const Tensor& bias, int dilation,
               Padding padding) {
  const auto g =
      detail::conv_geometry(x.values.shape(), w.values.shape(), bias.shape(), dilation, padding);
  detail::check_activation(x, "qconv1d");
  detail::check_weight(w, "qconv1d");
  Tensor out({g.c_out, g.t_out});
  for (std::size_t o = 0; o < g.c_out; ++o) {
    for (std::size_t t = 0; t < g.t_out; ++t) {
      std::int32_t acc = 0;
      for (std::size_t ci = 0; ci < g.c_in; ++ci) {
        for (std::size_t k = 0; k < g.k; ++k) {
          const long src = static_cast<long>(t) + static_cast<long>(k) * dilation - g.pad;
          // Padding stands for real zero: (q + zero_point) = 0 contributes nothing.
          if (src < 0 || src >= static_cast<long>(g.t_in)) continue;
          const auto xv =
              detail::shifted_activation(x.values.i8()[ci * g.t_in + src], x.params.zero_point());
          if (!detail::mac_checked(acc, xv, w.values.i8()[(o * g.c_in + ci) * g.k + k]))
            detail::overflow("qconv1d");
        }
      }
      out.f32()[o * g.t_out + t] =
          detail::rescale(acc, x.params.scale(), detail::weight_scale(w.params, o), bias.f32()[o]);
    }
  }
  return out;
}

}  // namespace qsv::ref
