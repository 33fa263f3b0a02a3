#include "qsv/calibrate_model.hpp"

#include <algorithm>
#include <vector>

#include "qsv/error.hpp"

namespace qsv {

CalibrationResult run_calibration(const ModelWeights& weights, const ModelConfig& config, const FeatureSet& data,
                                  const std::set<LayerName>& layers, const Observer& observer,
                                  std::size_t max_utterances, int jobs) {
  if (data.utterances.empty()) throw Error("run_calibration: calibration dataset is empty");
  std::vector<const Tensor*> inputs;
  for (const auto& [id, utt] : data.utterances) {
    if (max_utterances && inputs.size() == max_utterances) break;
    inputs.push_back(&utt.features);
  }

  const auto bins = observer.histogram_bins();
  auto fresh = [&] {
    std::map<LayerName, CalibStats> m;
    for (auto l : layers) m.emplace(l, CalibStats(std::string(layer_id(l)), bins));
    return m;
  };

  std::vector<std::map<LayerName, CalibStats>> partial(inputs.size());
  std::string failure;
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, jobs))
  for (long i = 0; i < static_cast<long>(inputs.size()); ++i) {
    auto stats = fresh();
    const ActivationHook hook = [&stats](LayerName l, const Tensor& x) {
      if (auto it = stats.find(l); it != stats.end()) it->second.observe(x);
    };
    try {
      forward(weights, config, *inputs[i], nullptr, hook);
      partial[i] = std::move(stats);
    } catch (const std::exception& e) {
#pragma omp critical
      if (failure.empty()) failure = e.what();
    }
  }
  if (!failure.empty()) throw Error("run_calibration: " + failure);

  CalibrationResult result;
  result.activations = fresh();
  for (const auto& p : partial)
    for (const auto& [l, s] : p) result.activations.at(l).merge(s);

  for (const auto& name : weights.names()) {
    if (!is_quantizable_weight(name) || !layers.count(layer_of(name))) continue;
    CalibStats s(name, 0);
    s.observe(weights.get(name));
    result.weights.emplace(name, std::move(s));
  }
  return result;
}

std::map<LayerName, QuantParams> activation_params(const CalibrationResult& calib, const Observer& observer) {
  std::map<LayerName, QuantParams> params;
  for (const auto& [layer, stats] : calib.activations) {
    const auto range = finalize(stats, observer);
    params.emplace(layer, compute_params(range.lo, range.hi, Scheme::affine));
  }
  return params;
}

}  // namespace qsv
