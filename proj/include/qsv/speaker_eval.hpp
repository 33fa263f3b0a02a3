#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "qsv/model.hpp"

namespace qsv {

struct FeatureSet;

struct Trial {
  std::string enroll;
  std::string test;
  bool target = false;

  bool operator==(const Trial&) const = default;
};

struct ScoredTrial {
  double score;
  bool target;
};

struct EerResult {
  double eer;
  double threshold;
};

struct EvalReport {
  double eer = 0.0;
  double threshold = 0.0;
  std::size_t n_target = 0;
  std::size_t n_nontarget = 0;

  bool operator==(const EvalReport&) const = default;
};

/// <a, b> / (|a| |b|); throws on zero-norm or length mismatch.
double cosine_score(std::span<const float> a, std::span<const float> b);

/// Equal error rate by threshold sweep. Candidates are -inf, the midpoints
/// between consecutive distinct scores, and +inf; a trial is accepted when
/// score >= threshold. Returns the candidate minimising |FAR - FRR| (the
/// lowest one on ties) with eer = (FAR + FRR) / 2 there.
EerResult compute_eer(std::span<const ScoredTrial> scores);

/// Embeds every utterance the trials reference (once each), scores trials by
/// cosine similarity and returns the EER. `jobs` bounds the worker threads
/// used for embedding extraction.
EvalReport evaluate_model(const ModelWeights& weights, const ModelConfig& config, const QuantContext* qctx,
                          const FeatureSet& features, std::span<const Trial> trials, int jobs = 1);

/// Trial list: one `<target 0|1> <enroll_id> <test_id>` line per trial.
std::vector<Trial> read_trials(const std::filesystem::path& path);
void write_trials(const std::filesystem::path& path, std::span<const Trial> trials);

}  // namespace qsv
