#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "qsv/speaker_eval.hpp"
#include "qsv/tensor.hpp"

namespace qsv {

/// Synthetic speaker corpus. Speaker k has a fixed mean vector scaled by
/// `spread`; every frame adds `noise`-scaled Gaussian noise that is then
/// smoothed by a centred moving average of `smoothing` frames.
struct SpeakerDatasetSpec {
  std::uint32_t n_speakers = 20;
  std::uint32_t utts_per_speaker = 10;
  std::uint32_t frames = 100;
  std::uint32_t feat_dim = 16;
  double spread = 1.0;
  double noise = 0.3;
  std::uint32_t smoothing = 5;
  std::uint64_t seed = 42;

  void validate() const;
};

enum class Split { calibration, evaluation };

const char* split_name(Split split);

struct Utterance {
  std::string speaker;
  Tensor features;  // [F, T]

  bool operator==(const Utterance&) const = default;
};

/// Utterances keyed by id "spk<k>/utt<j>".
struct FeatureSet {
  std::map<std::string, Utterance> utterances;
  Split split = Split::evaluation;

  std::size_t feat_dim() const;
  bool operator==(const FeatureSet&) const = default;
};

/// Seed offset between the evaluation and calibration splits of one corpus.
inline constexpr std::uint64_t kCalibrationSeedOffset = 1;

/// The calibration counterpart of an evaluation spec: same shape, other seed,
/// hence disjoint speakers.
SpeakerDatasetSpec calibration_spec(const SpeakerDatasetSpec& eval_spec);

/// Bit-reproducible for a given spec: all randomness comes from
/// std::mt19937_64 streams seeded through std::seed_seq{seed, speaker[, utt]}.
FeatureSet generate(const SpeakerDatasetSpec& spec, Split split = Split::evaluation);

/// Samples distinct unordered pairs without replacement; never pairs an
/// utterance with itself.
std::vector<Trial> build_trials(const FeatureSet& features, std::size_t n_target, std::size_t n_nontarget,
                                std::uint64_t seed);

// Feature files: "FEAT" | F u32 | T u32 | F*T f32 channel-major, all
// little-endian. A feature set is a directory of spk<k>/utt<j>.feat files.
void save_features(const FeatureSet& features, const std::filesystem::path& dir);
FeatureSet load_features(const std::filesystem::path& dir, Split split = Split::evaluation);

Tensor read_feature_file(const std::filesystem::path& path);
void write_feature_file(const std::filesystem::path& path, const Tensor& features);

/// Mean raw-feature cosine similarity over same-speaker and over
/// different-speaker utterance pairs (time-averaged features).
struct SeparationStats {
  double same_speaker;
  double different_speaker;
};
SeparationStats raw_separation(const FeatureSet& features);

}  // namespace qsv
