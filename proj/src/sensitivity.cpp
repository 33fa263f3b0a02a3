#include "qsv/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <sstream>

#include "qsv/calibrate_model.hpp"
#include "qsv/error.hpp"
#include "qsv/model_io.hpp"

namespace qsv {

std::uint64_t model_size(const ModelWeights& weights, const ModelConfig& config, const QuantConfig& qconfig) {
  std::uint64_t size = model_header_size(config);
  for (const auto& name : weights.names()) {
    const bool quantized = qconfig.contains(layer_of(name)) && is_quantizable_weight(name);
    size += record_size(name, weights.get(name).shape(), quantized);
  }
  return size;
}

const SensitivityRow& SensitivityReport::row(LayerName layer) const {
  for (const auto& r : rows)
    if (r.layer == layer) return r;
  throw Error("report has no row for layer '" + std::string(layer_id(layer)) + "'");
}

SensitivityReport sweep_layers(std::span<const LayerName> layers, const ConfigEvaluator& evaluate, int jobs) {
  SensitivityReport report;
  const auto base = evaluate(QuantConfig{});
  report.baseline_eer = base.eer;
  report.baseline_size = base.size_bytes;

  std::vector<ConfigResult> results(layers.size(), ConfigResult{0.0, 0});
  std::string failure;
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, jobs))
  for (long i = 0; i < static_cast<long>(layers.size()); ++i) {
    try {
      QuantConfig q;
      q.layers.insert(layers[i]);
      results[i] = evaluate(q);
    } catch (const std::exception& e) {
#pragma omp critical
      if (failure.empty()) failure = e.what();
    }
  }
  if (!failure.empty()) throw Error(failure);

  for (std::size_t i = 0; i < layers.size(); ++i) {
    report.rows.push_back({layers[i], results[i].eer, results[i].size_bytes, results[i].eer - base.eer,
                           static_cast<std::int64_t>(results[i].size_bytes) -
                               static_cast<std::int64_t>(base.size_bytes)});
  }
  return report;
}

namespace {

ConfigResult evaluate_with(const Experiment& exp, const QuantConfig& q,
                           const std::map<LayerName, QuantParams>& activation, int jobs) {
  const auto ctx = prepare_quant(exp.weights, q, activation);
  const auto eval = evaluate_model(exp.weights, exp.config, &ctx, exp.evaluation, exp.trials, jobs);
  return {eval.eer, model_size(exp.weights, exp.config, q)};
}

}  // namespace

SensitivityReport sweep(const Experiment& exp, Metadata metadata) {
  const std::set<LayerName> all(kAllLayers.begin(), kAllLayers.end());
  const auto calib = run_calibration(exp.weights, exp.config, exp.calibration, all, exp.observer,
                                     exp.calib_utterances, exp.jobs);
  const auto activation = activation_params(calib, exp.observer);
  // Rows take the worker pool; embedding extraction inside a row runs on one thread.
  const ConfigEvaluator evaluate = [&](const QuantConfig& q) { return evaluate_with(exp, q, activation, 1); };
  auto report = sweep_layers(kAllLayers, evaluate, exp.jobs);
  report.metadata = std::move(metadata);
  report.metadata["observer"] = exp.observer.str();
  return report;
}

ConfigResult evaluate_config(const Experiment& exp, const QuantConfig& qconfig) {
  std::map<LayerName, QuantParams> activation;
  if (!qconfig.layers.empty()) {
    const auto calib = run_calibration(exp.weights, exp.config, exp.calibration, qconfig.layers, exp.observer,
                                       exp.calib_utterances, exp.jobs);
    activation = activation_params(calib, exp.observer);
  }
  return evaluate_with(exp, qconfig, activation, exp.jobs);
}

ConfigReport compare_config(const Experiment& exp, const QuantConfig& qconfig, Metadata metadata) {
  ConfigReport report{evaluate_config(exp, QuantConfig{}), qconfig, evaluate_config(exp, qconfig),
                      std::move(metadata)};
  report.metadata["observer"] = exp.observer.str();
  return report;
}

SelectionPolicy SelectionPolicy::threshold(double tau) {
  if (!(tau >= 0.0)) throw Error("selection policy: threshold must be >= 0");
  return {Kind::threshold, tau};
}

SelectionPolicy SelectionPolicy::top_k_exclude(std::size_t k) {
  if (k > kAllLayers.size()) throw Error("selection policy: k must be <= 7");
  return {Kind::top_k_exclude, static_cast<double>(k)};
}

SelectionPolicy SelectionPolicy::budget(double epsilon) {
  if (!(epsilon >= 0.0)) throw Error("selection policy: budget must be >= 0");
  return {Kind::budget, epsilon};
}

SelectionPolicy SelectionPolicy::parse(const std::string& text) {
  const auto sep = text.find_first_of(":=");
  if (sep == std::string::npos)
    throw Error("policy: expected threshold:<t>, topk:<k> or budget:<e>, got '" + text + "'");
  const auto kind = text.substr(0, sep);
  const auto arg = text.substr(sep + 1);
  char* end = nullptr;
  const double v = std::strtod(arg.c_str(), &end);
  if (arg.empty() || *end != '\0') throw Error("policy: bad number '" + arg + "'");
  if (kind == "threshold") return threshold(v);
  if (kind == "budget") return budget(v);
  if (kind == "topk" || kind == "top_k_exclude") {
    if (v < 0 || v != std::floor(v)) throw Error("policy: k must be a non-negative integer");
    return top_k_exclude(static_cast<std::size_t>(v));
  }
  throw Error("policy: unknown kind '" + kind + "'");
}

std::string SelectionPolicy::str() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::threshold: os << "threshold:" << value; break;
    case Kind::top_k_exclude: os << "topk:" << static_cast<std::size_t>(value); break;
    case Kind::budget: os << "budget:" << value; break;
  }
  return os.str();
}

QuantConfig select(const SensitivityReport& report, const SelectionPolicy& policy) {
  // Deltas in percentage points, rows in network order.
  std::vector<std::pair<LayerName, double>> deltas;
  for (const auto& r : report.rows) deltas.emplace_back(r.layer, 100.0 * r.delta_eer);
  std::stable_sort(deltas.begin(), deltas.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  QuantConfig q;
  switch (policy.kind) {
    case SelectionPolicy::Kind::threshold:
      for (const auto& [layer, d] : deltas)
        if (d < policy.value) q.layers.insert(layer);
      break;
    case SelectionPolicy::Kind::top_k_exclude: {
      auto order = deltas;
      // Largest delta first; among equals the later layer is dropped first.
      std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first > b.first;
      });
      const auto k = std::min(order.size(), static_cast<std::size_t>(policy.value));
      for (std::size_t i = k; i < order.size(); ++i) q.layers.insert(order[i].first);
      break;
    }
    case SelectionPolicy::Kind::budget: {
      auto order = deltas;
      std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
      double total = 0.0;
      for (const auto& [layer, d] : order) {
        if (total + d > policy.value) break;
        total += d;
        q.layers.insert(layer);
      }
      break;
    }
  }
  return q;
}

}  // namespace qsv
