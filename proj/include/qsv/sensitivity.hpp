#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "qsv/calibration.hpp"
#include "qsv/data_synth.hpp"
#include "qsv/model.hpp"
#include "qsv/speaker_eval.hpp"

namespace qsv {

/// Exact size in bytes of the model file with the weight tensors of every
/// layer in `qconfig` stored as int8 (biases and batchnorm stay f32).
std::uint64_t model_size(const ModelWeights& weights, const ModelConfig& config, const QuantConfig& qconfig);

using Metadata = std::map<std::string, std::string>;

struct SensitivityRow {
  LayerName layer;
  double eer;              // fraction
  std::uint64_t size_bytes;
  double delta_eer;        // eer - baseline eer, signed
  std::int64_t delta_size; // size_bytes - baseline size

  bool operator==(const SensitivityRow&) const = default;
};

/// One row per singly-quantized layer, in network order, next to the
/// unquantized baseline.
struct SensitivityReport {
  double baseline_eer = 0.0;
  std::uint64_t baseline_size = 0;
  std::vector<SensitivityRow> rows;
  Metadata metadata;

  const SensitivityRow& row(LayerName layer) const;
  bool operator==(const SensitivityReport&) const = default;
};

struct ConfigResult {
  double eer;
  std::uint64_t size_bytes;

  bool operator==(const ConfigResult&) const = default;
};

using ConfigEvaluator = std::function<ConfigResult(const QuantConfig&)>;

/// Evaluates the empty config and each singleton {layer}. Rows may run on up
/// to `jobs` threads; the evaluator must be a pure function of its argument.
SensitivityReport sweep_layers(std::span<const LayerName> layers, const ConfigEvaluator& evaluate, int jobs = 1);

/// Inputs shared by the sweep and by combined-config evaluation.
struct Experiment {
  const ModelWeights& weights;
  const ModelConfig& config;
  const FeatureSet& calibration;
  const FeatureSet& evaluation;
  std::span<const Trial> trials;
  Observer observer;
  std::size_t calib_utterances = 0;  // 0 = all
  int jobs = 1;
};

/// Calibrates every layer once on the float path, then measures each
/// single-layer int8 configuration on the evaluation trials.
SensitivityReport sweep(const Experiment& exp, Metadata metadata = {});

/// Calibrates the layers of `qconfig` jointly and measures EER and size of
/// the combined configuration.
ConfigResult evaluate_config(const Experiment& exp, const QuantConfig& qconfig);

struct SelectionPolicy {
  enum class Kind { threshold, top_k_exclude, budget };
  Kind kind = Kind::threshold;
  /// threshold and budget are in EER percentage points; top_k_exclude is k.
  double value = 0.05;

  static SelectionPolicy threshold(double tau);
  static SelectionPolicy top_k_exclude(std::size_t k);
  static SelectionPolicy budget(double epsilon);
  /// "threshold:<t>", "topk:<k>" or "budget:<e>"; '=' also accepted.
  static SelectionPolicy parse(const std::string& text);
  std::string str() const;
};

/// threshold(t): keep every layer whose delta is below t.
/// top_k_exclude(k): drop the k largest deltas (on ties, the later layer first).
/// budget(e): take layers in ascending delta order while the running sum of
/// taken deltas stays <= e.
QuantConfig select(const SensitivityReport& report, const SelectionPolicy& policy);

/// Baseline next to one mixed-precision configuration.
struct ConfigReport {
  ConfigResult baseline;
  QuantConfig quantized;
  ConfigResult proposed;
  Metadata metadata;

  bool operator==(const ConfigReport&) const = default;
};

ConfigReport compare_config(const Experiment& exp, const QuantConfig& qconfig, Metadata metadata = {});

}  // namespace qsv
