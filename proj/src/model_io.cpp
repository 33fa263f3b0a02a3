#include "qsv/model_io.hpp"

#include <fstream>
#include <iterator>

#include "binary_io.hpp"
#include "qsv/error.hpp"

namespace qsv {

namespace detail {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(path + ": cannot open for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(path + ": cannot open for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(path + ": write failed");
}

}  // namespace detail

namespace {

constexpr std::uint8_t kDtypeF32 = 0;
constexpr std::uint8_t kDtypeI8 = 1;

void write_shape(detail::ByteWriter& w, const Shape& shape) {
  w.u8(static_cast<std::uint8_t>(shape.size()));
  for (auto d : shape) w.u32(static_cast<std::uint32_t>(d));
}

/// Per-channel view of params, expanded along axis 0.
std::pair<std::vector<float>, std::vector<std::int32_t>> channel_params(const QuantizedTensor& q) {
  const auto rows = q.values.dim(0);
  if (q.params.granularity == Granularity::per_tensor)
    return {std::vector<float>(rows, q.params.scale()), std::vector<std::int32_t>(rows, q.params.zero_point())};
  if (q.params.axis != 0) throw Error("model file: only axis-0 per-channel params can be stored");
  return {q.params.scales, q.params.zero_points};
}

}  // namespace

std::size_t model_header_size(const ModelConfig& config) {
  return 4 + 2 + 9 * 4 + 4 * config.dilations.size() + 8 + 4;
}

std::size_t record_size(std::string_view name, const Shape& shape, bool quantized) {
  const std::size_t header = 4 + name.size() + 1 + 1 + 4 * shape.size();
  const std::size_t n = shape_numel(shape);
  return header + (quantized ? n + 8 * shape.at(0) : 4 * n);
}

std::string serialize_model(const ModelConfig& config, const ModelWeights& weights, const QuantContext* qctx) {
  detail::ByteWriter w;
  w.bytes({kModelMagic, 4});
  w.u16(kModelFormatVersion);
  for (auto v : {config.feat_dim, config.channels, config.res2_scale, config.kernel, config.stem_kernel,
                 config.se_bottleneck, config.attn_bottleneck, config.emb_dim})
    w.u32(v);
  w.u32(static_cast<std::uint32_t>(config.dilations.size()));
  for (auto d : config.dilations) w.u32(d);
  w.u64(config.seed);
  w.u32(static_cast<std::uint32_t>(weights.size()));

  for (const auto& name : weights.names()) {
    const QuantizedTensor* q = nullptr;
    if (qctx && qctx->config.contains(layer_of(name))) {
      const auto& lq = qctx->layers.at(layer_of(name));
      if (auto it = lq.weights.find(name); it != lq.weights.end()) q = &it->second;
    }
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.bytes(name);
    if (q) {
      w.u8(kDtypeI8);
      write_shape(w, q->values.shape());
      for (auto v : q->values.i8()) w.u8(static_cast<std::uint8_t>(v));
      const auto [scales, zps] = channel_params(*q);
      for (auto s : scales) w.f32(s);
      for (auto z : zps) w.i32(z);
    } else {
      const auto& t = weights.get(name);
      w.u8(kDtypeF32);
      write_shape(w, t.shape());
      for (auto v : t.f32()) w.f32(v);
    }
  }
  return w.take();
}

ModelFile parse_model(std::string_view bytes, const std::string& source) {
  detail::ByteReader r(bytes, source);
  if (r.remaining() < 4 || r.bytes(4) != std::string_view(kModelMagic, 4)) r.fail("bad magic (expected QSVM)");
  ModelFile file;
  file.version = r.u16();
  if (file.version != kModelFormatVersion) r.fail("unsupported model format version " + std::to_string(file.version));
  auto& c = file.config;
  for (auto* field : {&c.feat_dim, &c.channels, &c.res2_scale, &c.kernel, &c.stem_kernel, &c.se_bottleneck,
                      &c.attn_bottleneck, &c.emb_dim})
    *field = r.u32();
  const auto n_dil = r.u32();
  if (n_dil > 64) r.fail("implausible dilation count");
  c.dilations.resize(n_dil);
  for (auto& d : c.dilations) d = r.u32();
  c.seed = r.u64();
  try {
    c.validate();
  } catch (const Error& e) {
    r.fail(e.what());
  }

  const auto count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    ModelRecord rec;
    const auto len = r.u32();
    rec.name = std::string(r.bytes(len));
    const auto dtype = r.u8();
    const auto ndim = r.u8();
    if (ndim == 0) r.fail("tensor '" + rec.name + "' has no dimensions");
    Shape shape(ndim);
    for (auto& d : shape) {
      d = r.u32();
      if (d == 0) r.fail("tensor '" + rec.name + "' has a zero dimension");
    }
    const auto n = shape_numel(shape);
    if (dtype == kDtypeF32) {
      if (r.remaining() / 4 < n) r.fail("truncated payload");
      std::vector<float> values(n);
      for (auto& v : values) v = r.f32();
      rec.value = Tensor(shape, std::move(values));
    } else if (dtype == kDtypeI8) {
      std::vector<std::int8_t> values(n);
      const auto raw = r.bytes(n);
      for (std::size_t k = 0; k < n; ++k) values[k] = static_cast<std::int8_t>(raw[k]);
      std::vector<float> scales(shape[0]);
      std::vector<std::int32_t> zps(shape[0]);
      for (auto& s : scales) s = r.f32();
      for (auto& z : zps) z = r.i32();
      try {
        rec.value = QuantizedTensor{Tensor(shape, std::move(values)),
                                    QuantParams::per_channel(std::move(scales), std::move(zps), 0)};
      } catch (const Error& e) {
        r.fail("tensor '" + rec.name + "': " + e.what());
      }
    } else {
      r.fail("tensor '" + rec.name + "' has unknown dtype byte " + std::to_string(dtype));
    }
    file.records.push_back(std::move(rec));
  }
  if (!r.at_end()) r.fail("trailing bytes after last tensor record");
  return file;
}

ModelWeights ModelFile::to_weights() const {
  ModelWeights w;
  w.version = version;
  for (const auto& rec : records) {
    if (rec.quantized())
      w.add(rec.name, dequantize(std::get<QuantizedTensor>(rec.value)));
    else
      w.add(rec.name, std::get<Tensor>(rec.value));
  }
  check_weights(w, config);
  return w;
}

void write_model(const std::filesystem::path& path, const ModelConfig& config, const ModelWeights& weights,
                 const QuantContext* qctx) {
  detail::write_file(path.string(), serialize_model(config, weights, qctx));
}

ModelFile read_model(const std::filesystem::path& path) {
  return parse_model(detail::read_file(path.string()), path.string());
}

}  // namespace qsv
