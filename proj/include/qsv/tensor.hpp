#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace qsv {

enum class DType : std::uint8_t { f32 = 0, i8 = 1, i32 = 2 };

const char* dtype_name(DType dtype);

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major tensor. Feature maps use the channel-major [C, T] layout;
/// convolution weights are [C_out, C_in, K]; linear weights are [M, N].
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, DType dtype = DType::f32);
  Tensor(Shape shape, std::vector<float> values);
  Tensor(Shape shape, std::vector<std::int8_t> values);
  Tensor(Shape shape, std::vector<std::int32_t> values);

  static Tensor vector(std::initializer_list<float> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<float>> rows);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const noexcept { return shape_numel(shape_); }
  DType dtype() const noexcept { return static_cast<DType>(data_.index()); }
  bool empty() const noexcept { return shape_.empty(); }

  std::span<float> f32();
  std::span<const float> f32() const;
  std::span<std::int8_t> i8();
  std::span<const std::int8_t> i8() const;
  std::span<std::int32_t> i32();
  std::span<const std::int32_t> i32() const;

  /// Row `r` of a rank-2 f32 tensor.
  std::span<float> row(std::size_t r);
  std::span<const float> row(std::size_t r) const;

  Tensor reshaped(Shape shape) const;

  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  std::variant<std::vector<float>, std::vector<std::int8_t>, std::vector<std::int32_t>> data_;
};

/// Throws when `t` is not f32 or contains NaN/Inf; `what` prefixes the message.
void require_finite(const Tensor& t, const char* what);

}  // namespace qsv
