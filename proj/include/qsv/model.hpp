#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "qsv/quantization.hpp"
#include "qsv/tensor.hpp"

namespace qsv {

/// The seven independently quantizable units of the model, in network order.
enum class LayerName : std::uint8_t {
  conv1d_1,
  se_res2block_1,
  se_res2block_2,
  se_res2block_3,
  conv1d_2,
  attentive_stat_pooling,
  linear,
};

inline constexpr std::array<LayerName, 7> kAllLayers = {
    LayerName::conv1d_1,       LayerName::se_res2block_1,         LayerName::se_res2block_2,
    LayerName::se_res2block_3, LayerName::conv1d_2,               LayerName::attentive_stat_pooling,
    LayerName::linear,
};

std::string_view layer_id(LayerName layer);
/// Human-readable row label for report tables.
std::string_view layer_label(LayerName layer);
LayerName parse_layer(std::string_view id);
/// Layer owning a parameter tensor, from the prefix before the first '.'.
LayerName layer_of(std::string_view tensor_name);

struct ModelConfig {
  std::uint32_t feat_dim = 16;
  std::uint32_t channels = 32;
  std::uint32_t res2_scale = 4;
  std::vector<std::uint32_t> dilations = {2, 3, 4};
  std::uint32_t kernel = 3;
  std::uint32_t stem_kernel = 5;
  std::uint32_t se_bottleneck = 16;
  std::uint32_t attn_bottleneck = 16;
  std::uint32_t emb_dim = 8;
  std::uint64_t seed = 1;

  /// Channels after multi-layer aggregation (conv1d_2 output).
  std::uint32_t mfa_channels() const { return channels * static_cast<std::uint32_t>(dilations.size()); }
  /// Minimum number of frames forward() accepts.
  std::size_t min_frames() const;
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

inline constexpr std::uint16_t kWeightsVersion = 1;

/// Named parameter tensors in network order.
class ModelWeights {
 public:
  std::uint16_t version = kWeightsVersion;

  void add(std::string name, Tensor tensor);
  const Tensor& get(std::string_view name) const;
  Tensor& get_mut(std::string_view name);
  bool contains(std::string_view name) const;

  const std::vector<std::string>& names() const noexcept { return names_; }
  std::size_t size() const noexcept { return names_.size(); }
  std::size_t total_params() const;

  bool operator==(const ModelWeights&) const = default;

 private:
  std::vector<std::string> names_;
  std::map<std::string, Tensor, std::less<>> tensors_;
};

/// Convolution and linear weight matrices are quantized; biases and the
/// batchnorm affine stay f32.
bool is_quantizable_weight(std::string_view tensor_name);

/// Deterministic fan-in-scaled uniform initialisation from config.seed.
ModelWeights init_model(const ModelConfig& config);

/// Throws unless `weights` holds exactly the tensors `config` implies.
void check_weights(const ModelWeights& weights, const ModelConfig& config);

/// Every parameter element (weights, biases, batchnorm affine) owned by `layer`.
std::size_t layer_param_count(const ModelWeights& weights, LayerName layer);

struct QuantConfig {
  std::set<LayerName> layers;
  int bits = 8;

  bool contains(LayerName l) const { return layers.count(l) != 0; }
  static QuantConfig all();
  bool operator==(const QuantConfig&) const = default;
};

enum class ExecMode {
  integer,    // quantized operands through the int32-accumulating kernels
  simulated,  // fake-quant operands through the float kernels
};

/// Everything a quantized layer needs at run time: one activation parameter
/// set shared by every kernel input inside the layer, and the int8 weights.
struct LayerQuant {
  QuantParams activation;
  std::map<std::string, QuantizedTensor, std::less<>> weights;
};

struct QuantContext {
  QuantConfig config;
  std::map<LayerName, LayerQuant> layers;
  ExecMode mode = ExecMode::integer;
};

/// Quantizes the weights of every layer in `config`; `activation` must hold
/// params for each of them.
QuantContext prepare_quant(const ModelWeights& weights, const QuantConfig& config,
                           const std::map<LayerName, QuantParams>& activation,
                           ExecMode mode = ExecMode::integer);

/// Called with every kernel input inside a layer, on the float path.
using ActivationHook = std::function<void(LayerName, const Tensor&)>;

/// features [F, T] -> embedding [E]. Layers in qctx->config run quantized,
/// the rest in float. A null or empty context is the pure float path.
Tensor forward(const ModelWeights& weights, const ModelConfig& config, const Tensor& features,
               const QuantContext* qctx = nullptr, const ActivationHook& hook = {});

}  // namespace qsv
