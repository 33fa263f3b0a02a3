#pragma once

#include <map>
#include <set>
#include <string>

#include "qsv/calibration.hpp"
#include "qsv/data_synth.hpp"
#include "qsv/model.hpp"
#include "qsv/quantization.hpp"

namespace qsv {

struct CalibrationResult {
  /// One entry per instrumented layer: the union of every kernel input
  /// inside that layer, observed on the float path.
  std::map<LayerName, CalibStats> activations;
  /// Exact statistics of each stored quantizable weight tensor.
  std::map<std::string, CalibStats> weights;
};

/// Runs the float model over the first `max_utterances` utterances of
/// `data` (all when 0) in id order. Per-utterance statistics are merged in
/// that same order, so the result does not depend on `jobs`.
CalibrationResult run_calibration(const ModelWeights& weights, const ModelConfig& config, const FeatureSet& data,
                                  const std::set<LayerName>& layers, const Observer& observer,
                                  std::size_t max_utterances = 0, int jobs = 1);

/// Affine per-tensor activation params from finalized ranges.
std::map<LayerName, QuantParams> activation_params(const CalibrationResult& calib, const Observer& observer);

}  // namespace qsv
