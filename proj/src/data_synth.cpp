#include "qsv/data_synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "binary_io.hpp"
#include "qsv/error.hpp"

namespace qsv {

namespace fs = std::filesystem;

void SpeakerDatasetSpec::validate() const {
  if (!n_speakers || !utts_per_speaker || !frames || !feat_dim || !smoothing)
    throw Error("dataset spec: counts must be >= 1");
  if (!(spread > 0.0) || !std::isfinite(spread)) throw Error("dataset spec: spread must be > 0");
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw Error("dataset spec: noise must be >= 0");
}

const char* split_name(Split split) { return split == Split::calibration ? "calibration" : "evaluation"; }

std::size_t FeatureSet::feat_dim() const {
  if (utterances.empty()) throw Error("feature set is empty");
  return utterances.begin()->second.features.dim(0);
}

SpeakerDatasetSpec calibration_spec(const SpeakerDatasetSpec& eval_spec) {
  auto spec = eval_spec;
  spec.seed = eval_spec.seed + kCalibrationSeedOffset;
  return spec;
}

namespace {

std::mt19937_64 stream(std::initializer_list<std::uint32_t> words) {
  std::seed_seq seq(words);
  return std::mt19937_64(seq);
}

std::uint32_t lo32(std::uint64_t v) { return static_cast<std::uint32_t>(v); }
std::uint32_t hi32(std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); }

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Box-Muller on the raw generator output; std::normal_distribution is
/// implementation-defined.
double normal(std::mt19937_64& rng) {
  const double u1 = 1.0 - uniform01(rng);  // (0, 1]
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Unbiased integer in [0, bound) by rejection.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v;
  do v = rng();
  while (v >= limit);
  return v % bound;
}

template <typename T>
void shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[uniform_below(rng, i)]);
}

std::string utt_id(std::uint32_t speaker, std::uint32_t utt) {
  return "spk" + std::to_string(speaker) + "/utt" + std::to_string(utt);
}

}  // namespace

FeatureSet generate(const SpeakerDatasetSpec& spec, Split split) {
  spec.validate();
  const std::size_t f = spec.feat_dim;
  const std::size_t t = spec.frames;
  const long half = static_cast<long>(spec.smoothing) / 2;
  FeatureSet set;
  set.split = split;
  for (std::uint32_t k = 0; k < spec.n_speakers; ++k) {
    auto spk_rng = stream({lo32(spec.seed), hi32(spec.seed), k});
    std::vector<double> mean(f);
    for (auto& m : mean) m = spec.spread * normal(spk_rng);

    for (std::uint32_t j = 0; j < spec.utts_per_speaker; ++j) {
      auto rng = stream({lo32(spec.seed), hi32(spec.seed), k, j + 1});
      std::vector<double> raw(f * t);
      for (auto& v : raw) v = spec.noise * normal(rng);
      std::vector<float> values(f * t);
      for (std::size_t c = 0; c < f; ++c) {
        for (long i = 0; i < static_cast<long>(t); ++i) {
          const long a = std::max(0L, i - half);
          const long b = std::min(static_cast<long>(t) - 1, i - half + static_cast<long>(spec.smoothing) - 1);
          double acc = 0.0;
          for (long s = a; s <= b; ++s) acc += raw[c * t + s];
          values[c * t + i] = static_cast<float>(mean[c] + acc / static_cast<double>(b - a + 1));
        }
      }
      set.utterances.emplace(utt_id(k, j), Utterance{"spk" + std::to_string(k), Tensor({f, t}, std::move(values))});
    }
  }
  return set;
}

std::vector<Trial> build_trials(const FeatureSet& features, std::size_t n_target, std::size_t n_nontarget,
                                std::uint64_t seed) {
  if (n_target == 0 || n_nontarget == 0)
    throw Error("build_trials: need at least one target and one nontarget trial");
  std::vector<const std::string*> ids;
  std::vector<const std::string*> speakers;
  for (const auto& [id, utt] : features.utterances) {
    ids.push_back(&id);
    speakers.push_back(&utt.speaker);
  }
  std::vector<std::pair<std::size_t, std::size_t>> target, nontarget;
  for (std::size_t a = 0; a < ids.size(); ++a)
    for (std::size_t b = a + 1; b < ids.size(); ++b)
      (*speakers[a] == *speakers[b] ? target : nontarget).emplace_back(a, b);
  if (target.size() < n_target)
    throw Error("build_trials: only " + std::to_string(target.size()) + " same-speaker pairs available, " +
                std::to_string(n_target) + " requested");
  if (nontarget.size() < n_nontarget)
    throw Error("build_trials: only " + std::to_string(nontarget.size()) + " different-speaker pairs available, " +
                std::to_string(n_nontarget) + " requested");

  auto rng = stream({lo32(seed), hi32(seed), 0x7419u});
  shuffle(target, rng);
  shuffle(nontarget, rng);
  target.resize(n_target);
  nontarget.resize(n_nontarget);

  std::vector<Trial> trials;
  trials.reserve(n_target + n_nontarget);
  for (const auto& [a, b] : target) trials.push_back({*ids[a], *ids[b], true});
  for (const auto& [a, b] : nontarget) trials.push_back({*ids[a], *ids[b], false});
  shuffle(trials, rng);
  return trials;
}

Tensor read_feature_file(const fs::path& path) {
  const auto bytes = detail::read_file(path.string());
  detail::ByteReader r(bytes, path.string());
  if (r.remaining() < 4 || r.bytes(4) != "FEAT") r.fail("bad magic (expected FEAT)");
  const std::size_t f = r.u32();
  const std::size_t t = r.u32();
  if (f == 0 || t == 0) r.fail("zero feature dimension or frame count");
  if (r.remaining() != 4 * f * t) r.fail(r.remaining() < 4 * f * t ? "truncated payload" : "trailing bytes");
  std::vector<float> values(f * t);
  for (auto& v : values) v = r.f32();
  return Tensor({f, t}, std::move(values));
}

void write_feature_file(const fs::path& path, const Tensor& features) {
  if (features.rank() != 2) throw Error("feature tensor must be [F, T]");
  detail::ByteWriter w;
  w.bytes("FEAT");
  w.u32(static_cast<std::uint32_t>(features.dim(0)));
  w.u32(static_cast<std::uint32_t>(features.dim(1)));
  for (auto v : features.f32()) w.f32(v);
  detail::write_file(path.string(), w.take());
}

void save_features(const FeatureSet& features, const fs::path& dir) {
  for (const auto& [id, utt] : features.utterances) {
    const auto path = dir / (id + ".feat");
    fs::create_directories(path.parent_path());
    write_feature_file(path, utt.features);
  }
}

FeatureSet load_features(const fs::path& dir, Split split) {
  if (!fs::is_directory(dir)) throw Error(dir.string() + ": not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".feat") files.push_back(entry.path());
  if (files.empty()) throw Error(dir.string() + ": no feature files found");
  std::sort(files.begin(), files.end());

  FeatureSet set;
  set.split = split;
  std::size_t feat_dim = 0;
  for (const auto& path : files) {
    auto rel = fs::relative(path, dir);
    if (std::distance(rel.begin(), rel.end()) != 2)
      throw Error(path.string() + ": expected layout <speaker>/<utterance>.feat");
    Tensor t = read_feature_file(path);
    if (feat_dim == 0) feat_dim = t.dim(0);
    if (t.dim(0) != feat_dim)
      throw Error(path.string() + ": feature dimension " + std::to_string(t.dim(0)) + " differs from " +
                  std::to_string(feat_dim));
    const std::string id = (rel.parent_path() / rel.stem()).generic_string();
    set.utterances.emplace(id, Utterance{rel.parent_path().generic_string(), std::move(t)});
  }
  return set;
}

SeparationStats raw_separation(const FeatureSet& features) {
  std::vector<std::vector<float>> means;
  std::vector<const std::string*> speakers;
  for (const auto& [id, utt] : features.utterances) {
    const auto& x = utt.features;
    std::vector<float> m(x.dim(0));
    for (std::size_t c = 0; c < x.dim(0); ++c) {
      double acc = 0.0;
      for (auto v : x.row(c)) acc += v;
      m[c] = static_cast<float>(acc / static_cast<double>(x.dim(1)));
    }
    means.push_back(std::move(m));
    speakers.push_back(&utt.speaker);
  }
  double same = 0.0, diff = 0.0;
  std::size_t n_same = 0, n_diff = 0;
  for (std::size_t a = 0; a < means.size(); ++a)
    for (std::size_t b = a + 1; b < means.size(); ++b) {
      const double s = cosine_score(means[a], means[b]);
      if (*speakers[a] == *speakers[b]) {
        same += s;
        ++n_same;
      } else {
        diff += s;
        ++n_diff;
      }
    }
  if (!n_same || !n_diff) throw Error("raw_separation: need both same- and different-speaker pairs");
  return {same / static_cast<double>(n_same), diff / static_cast<double>(n_diff)};
}

}  // namespace qsv
