#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qsv/model.hpp"

namespace qsv {

// QSVM model file, all integers little-endian:
//
//   "QSVM" | version u16 | config block | tensor count u32 | records...
//
// config block: feat_dim, channels, res2_scale, kernel, stem_kernel,
//   se_bottleneck, attn_bottleneck, emb_dim, dilation count (all u32),
//   the dilations (u32 each), seed (u64).
// record: name length u32 | UTF-8 name | dtype u8 (0 f32, 1 i8) | ndim u8 |
//   dims (u32 each) | payload. i8 records are followed by dims[0] f32 scales
//   and dims[0] i32 zero points.

inline constexpr char kModelMagic[4] = {'Q', 'S', 'V', 'M'};
inline constexpr std::uint16_t kModelFormatVersion = 1;

struct ModelRecord {
  std::string name;
  std::variant<Tensor, QuantizedTensor> value;

  bool quantized() const { return value.index() == 1; }
  bool operator==(const ModelRecord&) const = default;
};

struct ModelFile {
  std::uint16_t version = kModelFormatVersion;
  ModelConfig config;
  std::vector<ModelRecord> records;

  /// Float weights; int8 records are dequantized.
  ModelWeights to_weights() const;
  bool operator==(const ModelFile&) const = default;
};

/// Serialized bytes of `weights`, with the weight tensors of every layer in
/// `qctx` (if any) stored as int8.
std::string serialize_model(const ModelConfig& config, const ModelWeights& weights,
                            const QuantContext* qctx = nullptr);
ModelFile parse_model(std::string_view bytes, const std::string& source = "<memory>");

void write_model(const std::filesystem::path& path, const ModelConfig& config, const ModelWeights& weights,
                 const QuantContext* qctx = nullptr);
ModelFile read_model(const std::filesystem::path& path);

/// Bytes before the first record.
std::size_t model_header_size(const ModelConfig& config);
/// Bytes one record occupies.
std::size_t record_size(std::string_view name, const Shape& shape, bool quantized);

}  // namespace qsv
