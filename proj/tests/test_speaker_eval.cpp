#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "eer_oracle.hpp"
#include "qsv/data_synth.hpp"
#include "qsv/error.hpp"
#include "qsv/speaker_eval.hpp"

using namespace qsv;
using qsv::testing::brute_force_eer;

namespace {

std::vector<ScoredTrial> make(std::vector<double> tar, std::vector<double> non) {
  std::vector<ScoredTrial> out;
  for (double s : tar) out.push_back({s, true});
  for (double s : non) out.push_back({s, false});
  return out;
}

std::vector<ScoredTrial> random_set(std::mt19937_64& rng) {
  const std::size_t n = 2 + rng() % 63;
  std::vector<ScoredTrial> v;
  // Coarse scores so that ties across classes are common.
  const int levels = 2 + static_cast<int>(rng() % 30);
  for (std::size_t i = 0; i < n; ++i) v.push_back({static_cast<double>(rng() % levels) / levels, (rng() & 1) != 0});
  v[0].target = true;
  v[1].target = false;
  return v;
}

}  // namespace

TEST_CASE("cosine_score") {
  const std::vector<float> a{1, 2, 3}, b{-1, -2, -3}, o{2, -1, 0};
  CHECK(cosine_score(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cosine_score(a, b) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(cosine_score(a, o) == 0.0);
  const std::vector<float> z{0, 0, 0}, shorter{1, 2};
  CHECK_THROWS_AS(cosine_score(a, z), Error);
  CHECK_THROWS_AS(cosine_score(a, shorter), Error);
}

TEST_CASE("compute_eer examples") {
  CHECK(compute_eer(make({0.9, 0.8}, {0.1, 0.2})).eer == 0.0);
  CHECK(compute_eer(make({0.9}, {0.1})).eer == 0.0);

  const auto mixed = make({0.8, 0.2}, {0.7, 0.1});
  const auto r = compute_eer(mixed);
  const auto o = brute_force_eer(mixed);
  CHECK(r.eer == 0.5);
  CHECK(r.eer == o.eer);
  CHECK(r.threshold == o.threshold);
  CHECK(r.threshold > 0.2);
  CHECK(r.threshold < 0.7);

  CHECK_THROWS_AS(compute_eer(make({0.5}, {})), Error);
  CHECK_THROWS_AS(compute_eer(make({}, {0.5})), Error);
  CHECK_THROWS_AS(compute_eer(make({NAN}, {0.5})), Error);
}

TEST_CASE("compute_eer matches exhaustive enumeration") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const auto v = random_set(rng);
    const auto r = compute_eer(v);
    const auto o = brute_force_eer(v);
    CHECK(r.eer == o.eer);
    CHECK(r.threshold == o.threshold);
    CHECK(r.eer >= 0.0);
    CHECK(r.eer <= 1.0);
  }
}

TEST_CASE("compute_eer invariances") {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 100; ++trial) {
    const auto v = random_set(rng);
    const double base = compute_eer(v).eer;

    auto mono = v;
    for (auto& s : mono) s.score = std::exp(3.0 * s.score) - 7.0;
    CHECK(compute_eer(mono).eer == base);

    auto dup = v;
    dup.insert(dup.end(), v.begin(), v.end());
    CHECK(compute_eer(dup).eer == base);

    auto shuffled = v;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(compute_eer(shuffled).eer == base);
  }
}

TEST_CASE("trial list io") {
  const auto dir = std::filesystem::temp_directory_path() / "qsv_test_trials";
  std::filesystem::create_directories(dir);
  const std::vector<Trial> trials{{"spk0/utt0", "spk0/utt1", true}, {"spk0/utt0", "spk1/utt0", false}};
  write_trials(dir / "t.txt", trials);
  CHECK(read_trials(dir / "t.txt") == trials);
  {
    std::ofstream(dir / "bad.txt") << "2 a b\n";
    CHECK_THROWS_WITH_AS(read_trials(dir / "bad.txt"), doctest::Contains(":1:"), Error);
    std::ofstream(dir / "empty.txt") << "";
    CHECK_THROWS_AS(read_trials(dir / "empty.txt"), Error);
  }
  CHECK_THROWS_AS(read_trials(dir / "missing.txt"), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("evaluate_model") {
  const ModelConfig cfg;
  const auto w = init_model(cfg);
  SpeakerDatasetSpec spec;
  spec.n_speakers = 6;
  spec.utts_per_speaker = 4;
  spec.noise = 1.5;
  const auto data = generate(spec);
  const auto trials = build_trials(data, 30, 30, 5);
  const auto base = evaluate_model(w, cfg, nullptr, data, trials);
  CHECK(base.n_target == 30);
  CHECK(base.n_nontarget == 30);
  CHECK(base == evaluate_model(w, cfg, nullptr, data, trials, 4));

  auto dup = trials;
  dup.insert(dup.end(), trials.begin(), trials.end());
  CHECK(evaluate_model(w, cfg, nullptr, data, dup).eer == base.eer);

  auto swapped = trials;
  for (auto& t : swapped) std::swap(t.enroll, t.test);
  CHECK(evaluate_model(w, cfg, nullptr, data, swapped).eer == base.eer);

  auto bad = trials;
  bad[0].test = "spk99/utt0";
  CHECK_THROWS_WITH_AS(evaluate_model(w, cfg, nullptr, data, bad), doctest::Contains("spk99/utt0"), Error);
  CHECK_THROWS_AS(evaluate_model(w, cfg, nullptr, data, {}), Error);
}

TEST_CASE("float EER on the default synthetic corpus") {
  // Frozen from the deterministic default pipeline.
  constexpr double kFrozenEer = 0.0;
  const ModelConfig cfg;
  const auto w = init_model(cfg);
  const SpeakerDatasetSpec spec;
  const auto data = generate(spec);
  const auto trials = build_trials(data, 500, 500, spec.seed);
  const auto r = evaluate_model(w, cfg, nullptr, data, trials, 4);
  CHECK(r.eer == kFrozenEer);
  CHECK(r.eer <= 0.05);
}
