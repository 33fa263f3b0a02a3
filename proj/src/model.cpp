#include "qsv/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "qsv/error.hpp"
#include "qsv/kernels.hpp"

namespace qsv {

namespace {

constexpr std::array<std::string_view, 7> kLayerIds = {
    "conv1d_1", "se_res2block_1", "se_res2block_2", "se_res2block_3",
    "conv1d_2", "attentive_stat_pooling", "linear",
};

constexpr std::array<std::string_view, 7> kLayerLabels = {
    "Conv1d",           "1st SE-Res2Block", "2nd SE-Res2Block",       "3rd SE-Res2Block",
    "Conv1d (aggregate)", "Attentive stat pooling", "Linear",
};

}  // namespace

std::string_view layer_id(LayerName layer) { return kLayerIds.at(static_cast<std::size_t>(layer)); }

std::string_view layer_label(LayerName layer) {
  return kLayerLabels.at(static_cast<std::size_t>(layer));
}

LayerName parse_layer(std::string_view id) {
  for (std::size_t i = 0; i < kLayerIds.size(); ++i)
    if (kLayerIds[i] == id) return kAllLayers[i];
  throw Error("unknown layer name '" + std::string(id) + "'");
}

LayerName layer_of(std::string_view tensor_name) {
  return parse_layer(tensor_name.substr(0, tensor_name.find('.')));
}

std::size_t ModelConfig::min_frames() const {
  const auto max_dil = *std::max_element(dilations.begin(), dilations.end());
  return std::max<std::size_t>(static_cast<std::size_t>(kernel) * max_dil, stem_kernel);
}

void ModelConfig::validate() const {
  if (!feat_dim || !channels || !res2_scale || !kernel || !stem_kernel || !se_bottleneck ||
      !attn_bottleneck || !emb_dim)
    throw Error("model config: all dimensions must be >= 1");
  if (dilations.empty()) throw Error("model config: need at least one SE-Res2Block dilation");
  if (dilations.size() != 3) throw Error("model config: the network has exactly three SE-Res2Blocks");
  for (auto d : dilations)
    if (d == 0) throw Error("model config: dilations must be >= 1");
  if (channels % res2_scale != 0) throw Error("model config: channels must be divisible by res2_scale");
  if (res2_scale < 2) throw Error("model config: res2_scale must be >= 2");
  if (kernel % 2 == 0 || stem_kernel % 2 == 0) throw Error("model config: kernel sizes must be odd");
}

void ModelWeights::add(std::string name, Tensor tensor) {
  if (tensors_.count(name)) throw Error("duplicate weight tensor '" + name + "'");
  names_.push_back(name);
  tensors_.emplace(std::move(name), std::move(tensor));
}

const Tensor& ModelWeights::get(std::string_view name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw Error("missing weight tensor '" + std::string(name) + "'");
  return it->second;
}

Tensor& ModelWeights::get_mut(std::string_view name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw Error("missing weight tensor '" + std::string(name) + "'");
  return it->second;
}

bool ModelWeights::contains(std::string_view name) const { return tensors_.find(name) != tensors_.end(); }

std::size_t ModelWeights::total_params() const {
  std::size_t n = 0;
  for (const auto& [_, t] : tensors_) n += t.numel();
  return n;
}

bool is_quantizable_weight(std::string_view tensor_name) {
  constexpr std::string_view suffix = ".weight";
  return tensor_name.size() > suffix.size() &&
         tensor_name.substr(tensor_name.size() - suffix.size()) == suffix;
}

namespace {

struct TensorSpec {
  std::string name;
  Shape shape;
};

void add_conv(std::vector<TensorSpec>& out, const std::string& name, std::size_t c_out,
              std::size_t c_in, std::size_t k, bool batchnorm) {
  out.push_back({name + ".weight", {c_out, c_in, k}});
  out.push_back({name + ".bias", {c_out}});
  if (batchnorm) {
    out.push_back({name + ".bn_scale", {c_out}});
    out.push_back({name + ".bn_shift", {c_out}});
  }
}

void add_linear(std::vector<TensorSpec>& out, const std::string& name, std::size_t m, std::size_t n) {
  out.push_back({name + ".weight", {m, n}});
  out.push_back({name + ".bias", {m}});
}

std::string res2_name(std::size_t group) { return "res2_" + std::to_string(group); }

std::vector<TensorSpec> architecture(const ModelConfig& cfg) {
  cfg.validate();
  const std::size_t c = cfg.channels;
  const std::size_t width = c / cfg.res2_scale;
  const std::size_t mfa = cfg.mfa_channels();
  std::vector<TensorSpec> specs;
  add_conv(specs, "conv1d_1", c, cfg.feat_dim, cfg.stem_kernel, true);
  for (std::size_t b = 0; b < cfg.dilations.size(); ++b) {
    const std::string p = std::string(layer_id(kAllLayers[1 + b])) + ".";
    add_conv(specs, p + "conv_in", c, c, 1, true);
    for (std::size_t g = 1; g < cfg.res2_scale; ++g) add_conv(specs, p + res2_name(g), width, width, cfg.kernel, true);
    add_conv(specs, p + "conv_out", c, c, 1, true);
    add_linear(specs, p + "se_squeeze", cfg.se_bottleneck, c);
    add_linear(specs, p + "se_excite", c, cfg.se_bottleneck);
  }
  add_conv(specs, "conv1d_2", mfa, mfa, 1, false);
  add_conv(specs, "attentive_stat_pooling.attn_hidden", cfg.attn_bottleneck, 3 * mfa, 1, false);
  add_conv(specs, "attentive_stat_pooling.attn_score", mfa, cfg.attn_bottleneck, 1, false);
  add_linear(specs, "linear", cfg.emb_dim, 2 * mfa);
  return specs;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

/// Uniform double in [0, 1) from the top 53 bits; std:: distributions are
/// implementation-defined and would break cross-platform reproducibility.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double uniform_sym(std::mt19937_64& rng, double bound) { return (2.0 * uniform01(rng) - 1.0) * bound; }

}  // namespace

ModelWeights init_model(const ModelConfig& config) {
  const auto specs = architecture(config);
  std::mt19937_64 rng(config.seed);
  ModelWeights weights;
  std::size_t fan_in = 1;
  for (const auto& spec : specs) {
    std::vector<float> values(shape_numel(spec.shape));
    if (ends_with(spec.name, ".weight")) {
      fan_in = shape_numel(spec.shape) / spec.shape[0];
      const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
      for (auto& v : values) v = static_cast<float>(uniform_sym(rng, bound));
    } else if (ends_with(spec.name, ".bias")) {
      const double bound = 0.1 / std::sqrt(static_cast<double>(fan_in));
      for (auto& v : values) v = static_cast<float>(uniform_sym(rng, bound));
    } else if (ends_with(spec.name, ".bn_scale")) {
      for (auto& v : values) v = static_cast<float>(1.0 + uniform_sym(rng, 0.1));
    } else {
      for (auto& v : values) v = static_cast<float>(uniform_sym(rng, 0.1));
    }
    weights.add(spec.name, Tensor(spec.shape, std::move(values)));
  }
  return weights;
}

void check_weights(const ModelWeights& weights, const ModelConfig& config) {
  const auto specs = architecture(config);
  if (specs.size() != weights.size())
    throw Error("model weights hold " + std::to_string(weights.size()) + " tensors, architecture needs " +
                std::to_string(specs.size()));
  for (const auto& spec : specs) {
    const auto& t = weights.get(spec.name);
    if (t.shape() != spec.shape)
      throw Error("weight '" + spec.name + "' has shape " + shape_str(t.shape()) + ", expected " +
                  shape_str(spec.shape));
    if (t.dtype() != DType::f32) throw Error("weight '" + spec.name + "' is not f32");
  }
}

std::size_t layer_param_count(const ModelWeights& weights, LayerName layer) {
  std::size_t n = 0;
  for (const auto& name : weights.names())
    if (layer_of(name) == layer) n += weights.get(name).numel();
  return n;
}

QuantConfig QuantConfig::all() {
  QuantConfig q;
  q.layers.insert(kAllLayers.begin(), kAllLayers.end());
  return q;
}

QuantContext prepare_quant(const ModelWeights& weights, const QuantConfig& config,
                           const std::map<LayerName, QuantParams>& activation, ExecMode mode) {
  if (config.bits != 8) throw Error("quant config: only 8-bit quantization is supported");
  QuantContext ctx;
  ctx.config = config;
  ctx.mode = mode;
  for (auto layer : config.layers) {
    auto it = activation.find(layer);
    if (it == activation.end())
      throw Error("no activation params for quantized layer '" + std::string(layer_id(layer)) + "'");
    LayerQuant lq;
    lq.activation = it->second;
    lq.activation.validate();
    if (lq.activation.granularity != Granularity::per_tensor)
      throw Error("activation params for '" + std::string(layer_id(layer)) + "' must be per-tensor");
    for (const auto& name : weights.names())
      if (layer_of(name) == layer && is_quantizable_weight(name))
        lq.weights.emplace(name, quantize_weight(weights.get(name)));
    ctx.layers.emplace(layer, std::move(lq));
  }
  return ctx;
}

namespace {

/// Runs the kernels of one layer on the float or quantized path.
class LayerExec {
 public:
  LayerExec(const ModelWeights& weights, const QuantContext* qctx, const ActivationHook& hook,
            LayerName layer)
      : weights_(weights), hook_(hook), layer_(layer), prefix_(layer_id(layer)) {
    if (qctx && qctx->config.contains(layer)) {
      auto it = qctx->layers.find(layer);
      if (it == qctx->layers.end())
        throw Error("quantized layer '" + prefix_ + "' has no prepared params");
      quant_ = &it->second;
      mode_ = qctx->mode;
    }
  }

  /// The layer's input as the quantized layer sees it.
  Tensor input(const Tensor& x) const { return quant_ ? fake_quant(x, quant_->activation) : x; }

  Tensor conv(const std::string& sub, const Tensor& x, int dilation) const {
    const auto name = qualified(sub);
    if (hook_) hook_(layer_, x);
    const auto& bias = weights_.get(name + ".bias");
    if (!quant_) return conv1d(x, weights_.get(name + ".weight"), bias, dilation, Padding::same);
    const auto qx = quantize(x, quant_->activation);
    const auto& qw = quant_->weights.at(name + ".weight");
    if (mode_ == ExecMode::integer) return qconv1d(qx, qw, bias, dilation, Padding::same);
    return conv1d(dequantize(qx), dequantize(qw), bias, dilation, Padding::same);
  }

  Tensor dense(const std::string& sub, const Tensor& x) const {
    const auto name = qualified(sub);
    if (hook_) hook_(layer_, x);
    const auto& bias = weights_.get(name + ".bias");
    if (!quant_) return linear(x, weights_.get(name + ".weight"), bias);
    const auto qx = quantize(x, quant_->activation);
    const auto& qw = quant_->weights.at(name + ".weight");
    if (mode_ == ExecMode::integer) return qlinear(qx, qw, bias);
    return linear(dequantize(qx), dequantize(qw), bias);
  }

  /// relu followed by the batchnorm affine of `sub`.
  Tensor relu_bn(const std::string& sub, const Tensor& x) const {
    const auto name = qualified(sub);
    return channel_affine(relu(x), weights_.get(name + ".bn_scale"), weights_.get(name + ".bn_shift"));
  }

 private:
  std::string qualified(const std::string& sub) const { return sub.empty() ? prefix_ : prefix_ + "." + sub; }

  const ModelWeights& weights_;
  const ActivationHook& hook_;
  LayerName layer_;
  std::string prefix_;
  const LayerQuant* quant_ = nullptr;
  ExecMode mode_ = ExecMode::integer;
};

Tensor channel_slice(const Tensor& x, std::size_t begin, std::size_t count) {
  const auto t = x.dim(1);
  const auto src = x.f32().subspan(begin * t, count * t);
  return Tensor({count, t}, std::vector<float>(src.begin(), src.end()));
}

Tensor se_res2block(const LayerExec& e, const ModelConfig& cfg, const Tensor& x, int dilation) {
  const Tensor xin = e.input(x);
  const Tensor h = e.relu_bn("conv_in", e.conv("conv_in", xin, 1));
  const std::size_t width = cfg.channels / cfg.res2_scale;

  std::vector<Tensor> groups;
  groups.push_back(channel_slice(h, 0, width));
  for (std::size_t g = 1; g < cfg.res2_scale; ++g) {
    Tensor in = channel_slice(h, g * width, width);
    if (g > 1) in = add(in, groups.back());
    const auto name = res2_name(g);
    groups.push_back(e.relu_bn(name, e.conv(name, in, dilation)));
  }

  Tensor z = e.relu_bn("conv_out", e.conv("conv_out", concat_channels(groups), 1));
  const Tensor squeezed = relu(e.dense("se_squeeze", time_mean(z)));
  const Tensor gate = sigmoid(e.dense("se_excite", squeezed));
  return add(channel_scale(z, gate), xin);
}

Tensor broadcast_time(std::span<const float> v, std::size_t t) {
  std::vector<float> values;
  values.reserve(v.size() * t);
  for (auto x : v) values.insert(values.end(), t, x);
  return Tensor({v.size(), t}, std::move(values));
}

Tensor attentive_stat_pool(const LayerExec& e, const Tensor& x) {
  const Tensor h = e.input(x);
  const auto c = h.dim(0);
  const auto t = h.dim(1);
  const Tensor global = mean_std_pool(h);
  const auto g = global.f32();
  const Tensor context =
      concat_channels({h, broadcast_time(g.subspan(0, c), t), broadcast_time(g.subspan(c, c), t)});
  const Tensor hidden = qsv::tanh(e.conv("attn_hidden", context, 1));
  const Tensor attn = softmax_over_time(e.conv("attn_score", hidden, 1));

  Tensor pooled({2 * c});
  auto out = pooled.f32();
  for (std::size_t ch = 0; ch < c; ++ch) {
    const auto hr = h.row(ch);
    const auto ar = attn.row(ch);
    double mean = 0.0;
    double sq = 0.0;
    for (std::size_t i = 0; i < t; ++i) {
      mean += static_cast<double>(ar[i]) * hr[i];
      sq += static_cast<double>(ar[i]) * hr[i] * hr[i];
    }
    const double var = std::max(0.0, sq - mean * mean);
    out[ch] = static_cast<float>(mean);
    out[c + ch] = static_cast<float>(std::sqrt(var + kPoolEps));
  }
  return pooled;
}

}  // namespace

Tensor forward(const ModelWeights& weights, const ModelConfig& config, const Tensor& features,
               const QuantContext* qctx, const ActivationHook& hook) {
  config.validate();
  if (features.rank() != 2 || features.dim(0) != config.feat_dim)
    throw Error("forward: features must be [" + std::to_string(config.feat_dim) + ", T], got " +
                shape_str(features.shape()));
  if (features.dim(1) < config.min_frames())
    throw Error("forward: " + std::to_string(features.dim(1)) + " frames is shorter than the minimum " +
                std::to_string(config.min_frames()));
  if (qctx)
    for (auto layer : qctx->config.layers)
      if (!qctx->layers.count(layer))
        throw Error("forward: missing quantization params for layer '" + std::string(layer_id(layer)) + "'");

  auto exec = [&](LayerName l) { return LayerExec(weights, qctx, hook, l); };

  const auto stem = exec(LayerName::conv1d_1);
  Tensor x = stem.relu_bn("", stem.conv("", stem.input(features), 1));

  std::vector<Tensor> block_outputs;
  for (std::size_t b = 0; b < 3; ++b) {
    x = se_res2block(exec(kAllLayers[1 + b]), config, x, static_cast<int>(config.dilations[b]));
    block_outputs.push_back(x);
  }

  const auto agg = exec(LayerName::conv1d_2);
  const Tensor mfa = relu(agg.conv("", agg.input(concat_channels(block_outputs)), 1));
  const Tensor pooled = attentive_stat_pool(exec(LayerName::attentive_stat_pooling), mfa);
  const auto head = exec(LayerName::linear);
  return head.dense("", head.input(pooled));
}

}  // namespace qsv
