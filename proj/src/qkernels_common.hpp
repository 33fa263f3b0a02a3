#pragma once

#include <cstdint>
#include <string>

#include "qsv/error.hpp"
#include "qsv/quantization.hpp"

namespace qsv::detail {

inline void check_activation(const QuantizedTensor& x, const char* op) {
  x.params.validate();
  if (x.params.granularity != Granularity::per_tensor)
    throw Error(std::string(op) + ": activation params must be per-tensor");
}

inline void check_weight(const QuantizedTensor& w, const char* op) {
  w.params.validate();
  if (!w.params.is_symmetric()) throw Error(std::string(op) + ": weight must be quantized symmetrically");
  const bool per_row = w.params.granularity == Granularity::per_channel && w.params.axis == 0 &&
                       w.params.channels() == w.values.dim(0);
  if (!per_row && w.params.granularity != Granularity::per_tensor)
    throw Error(std::string(op) + ": weight params must be per-tensor or per output channel");
}

inline float weight_scale(const QuantParams& p, std::size_t row) {
  return p.granularity == Granularity::per_tensor ? p.scales[0] : p.scales[row];
}

/// acc += a * b with int32 overflow detection. Returns false on overflow.
inline bool mac_checked(std::int32_t& acc, std::int32_t a, std::int32_t b) {
  std::int32_t prod;
  if (__builtin_mul_overflow(a, b, &prod)) return false;
  return !__builtin_add_overflow(acc, prod, &acc);
}

inline std::int32_t shifted_activation(std::int8_t q, std::int32_t zero_point) {
  std::int32_t v;
  if (__builtin_add_overflow(static_cast<std::int32_t>(q), zero_point, &v))
    throw Error("integer kernel: activation offset overflows int32");
  return v;
}

inline float rescale(std::int32_t acc, float scale_x, float scale_w, float bias) {
  return static_cast<float>(static_cast<double>(scale_x) * static_cast<double>(scale_w) *
                                static_cast<double>(acc) +
                            static_cast<double>(bias));
}

[[noreturn]] inline void overflow(const char* op) {
  throw Error(std::string(op) + ": int32 accumulator overflow");
}

}  // namespace qsv::detail
