#include "qsv/tensor.hpp"

#include <cmath>
#include <sstream>

#include "qsv/error.hpp"

namespace qsv {

const char* dtype_name(DType dtype) {
  switch (dtype) {
    case DType::f32: return "f32";
    case DType::i8: return "i8";
    case DType::i32: return "i32";
  }
  return "?";
}

std::size_t shape_numel(const Shape& shape) {
  if (shape.empty()) return 0;
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? ", " : "") << shape[i];
  os << ']';
  return os.str();
}

namespace {

void check_shape(const Shape& shape) {
  if (shape.empty()) throw Error("tensor shape must have at least one dimension");
  for (auto d : shape)
    if (d == 0) throw Error("tensor shape " + shape_str(shape) + " has a zero dimension");
}

template <typename T>
void check_length(const Shape& shape, const std::vector<T>& values) {
  check_shape(shape);
  if (values.size() != shape_numel(shape))
    throw Error("tensor data length " + std::to_string(values.size()) + " does not match shape " +
                shape_str(shape));
}

}  // namespace

Tensor::Tensor(Shape shape, DType dtype) : shape_(std::move(shape)) {
  check_shape(shape_);
  const auto n = shape_numel(shape_);
  switch (dtype) {
    case DType::f32: data_ = std::vector<float>(n, 0.0f); break;
    case DType::i8: data_ = std::vector<std::int8_t>(n, 0); break;
    case DType::i32: data_ = std::vector<std::int32_t>(n, 0); break;
  }
}

Tensor::Tensor(Shape shape, std::vector<float> values) : shape_(std::move(shape)) {
  check_length(shape_, values);
  data_ = std::move(values);
}

Tensor::Tensor(Shape shape, std::vector<std::int8_t> values) : shape_(std::move(shape)) {
  check_length(shape_, values);
  data_ = std::move(values);
}

Tensor::Tensor(Shape shape, std::vector<std::int32_t> values) : shape_(std::move(shape)) {
  check_length(shape_, values);
  data_ = std::move(values);
}

Tensor Tensor::vector(std::initializer_list<float> values) {
  return Tensor({values.size()}, std::vector<float>(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<float>> rows) {
  if (rows.size() == 0) throw Error("matrix needs at least one row");
  const auto cols = rows.begin()->size();
  std::vector<float> values;
  for (const auto& r : rows) {
    if (r.size() != cols) throw Error("ragged matrix literal");
    values.insert(values.end(), r.begin(), r.end());
  }
  return Tensor({rows.size(), cols}, std::move(values));
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size())
    throw Error("axis " + std::to_string(axis) + " out of range for shape " + shape_str(shape_));
  return shape_[axis];
}

namespace {
template <typename T, typename V>
auto& get_payload(V& data, DType want) {
  auto* p = std::get_if<std::vector<T>>(&data);
  if (!p) throw Error(std::string("tensor is not ") + dtype_name(want));
  return *p;
}
}  // namespace

std::span<float> Tensor::f32() { return get_payload<float>(data_, DType::f32); }
std::span<const float> Tensor::f32() const { return get_payload<float>(data_, DType::f32); }
std::span<std::int8_t> Tensor::i8() { return get_payload<std::int8_t>(data_, DType::i8); }
std::span<const std::int8_t> Tensor::i8() const { return get_payload<std::int8_t>(data_, DType::i8); }
std::span<std::int32_t> Tensor::i32() { return get_payload<std::int32_t>(data_, DType::i32); }
std::span<const std::int32_t> Tensor::i32() const {
  return get_payload<std::int32_t>(data_, DType::i32);
}

std::span<float> Tensor::row(std::size_t r) {
  if (rank() != 2 || r >= shape_[0]) throw Error("row access needs a rank-2 tensor and a valid row");
  return f32().subspan(r * shape_[1], shape_[1]);
}

std::span<const float> Tensor::row(std::size_t r) const {
  if (rank() != 2 || r >= shape_[0]) throw Error("row access needs a rank-2 tensor and a valid row");
  return f32().subspan(r * shape_[1], shape_[1]);
}

Tensor Tensor::reshaped(Shape shape) const {
  check_shape(shape);
  if (shape_numel(shape) != numel())
    throw Error("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
  Tensor out = *this;
  out.shape_ = std::move(shape);
  return out;
}

void require_finite(const Tensor& t, const char* what) {
  const auto v = t.f32();
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i]))
      throw Error(std::string(what) + ": non-finite value at index " + std::to_string(i));
}

}  // namespace qsv
