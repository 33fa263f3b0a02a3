#pragma once

#include <vector>

#include "qsv/tensor.hpp"

namespace qsv {

enum class Padding { same, valid };

/// Variance floor used by the pooling kernels.
inline constexpr double kPoolEps = 1e-8;

// Float kernels used by the reference model. Output channels are split across
// OpenMP threads; each output element is summed in a fixed order, so results
// are bit-identical to the serial versions in `qsv::ref` for any thread count.

/// Cross-correlation over time with zero padding. input [C_in, T], weight
/// [C_out, C_in, K], bias [C_out]. Same-padding requires odd K and keeps T.
Tensor conv1d(const Tensor& input, const Tensor& weight, const Tensor& bias, int dilation,
              Padding padding);

/// input [N], weight [M, N], bias [M] -> [M].
Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
/// Softmax along the time axis of a [C, T] tensor, independently per channel.
Tensor softmax_over_time(const Tensor& x);

/// [C, T] -> [2C]: per-channel means followed by sqrt(var + kPoolEps), where
/// var is the population variance.
Tensor mean_std_pool(const Tensor& input);

/// Channel-axis concatenation of [C_i, T] tensors in argument order.
Tensor concat_channels(const std::vector<Tensor>& parts);

/// Per-channel affine y = scale[c] * x + shift[c] over a [C, T] tensor.
Tensor channel_affine(const Tensor& x, const Tensor& scale, const Tensor& shift);

/// Multiplies each channel of [C, T] by gate[c].
Tensor channel_scale(const Tensor& x, const Tensor& gate);

/// Time-mean of a [C, T] tensor -> [C].
Tensor time_mean(const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);

/// Output length of a convolution, throwing when it would be < 1.
std::size_t conv_output_length(std::size_t t, std::size_t k, int dilation, Padding padding);

namespace ref {

// Straight-line single-threaded versions of the parallel kernels above.
Tensor conv1d(const Tensor& input, const Tensor& weight, const Tensor& bias, int dilation,
              Padding padding);
Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias);

}  // namespace ref

}  // namespace qsv
