#include "qsv/speaker_eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "qsv/data_synth.hpp"
#include "qsv/error.hpp"

namespace qsv {

double cosine_score(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw Error("cosine_score: embeddings differ in length");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw Error("cosine_score: zero-norm embedding");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

EerResult compute_eer(std::span<const ScoredTrial> scores) {
  std::vector<ScoredTrial> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.score < b.score; });
  std::int64_t n_tar = 0, n_non = 0;
  for (const auto& s : sorted) {
    if (!std::isfinite(s.score)) throw Error("compute_eer: non-finite score");
    (s.target ? n_tar : n_non) += 1;
  }
  if (n_tar == 0 || n_non == 0) throw Error("compute_eer: need at least one target and one nontarget trial");

  // Walking thresholds upward: everything below the threshold is rejected.
  // |FAR - FRR| is compared as |acc_non * n_tar - rej_tar * n_non| to stay exact.
  std::int64_t rej_tar = 0, rej_non = 0;
  auto gap = [&] { return std::llabs((n_non - rej_non) * n_tar - rej_tar * n_non); };

  double best_threshold = -std::numeric_limits<double>::infinity();
  std::int64_t best_gap = gap();
  std::int64_t best_rej_tar = 0, best_rej_non = 0;

  std::size_t i = 0;
  while (i < sorted.size()) {
    const double s = sorted[i].score;
    for (; i < sorted.size() && sorted[i].score == s; ++i) (sorted[i].target ? rej_tar : rej_non) += 1;
    const double threshold =
        i < sorted.size() ? (s + sorted[i].score) / 2.0 : std::numeric_limits<double>::infinity();
    if (const auto g = gap(); g < best_gap) {
      best_gap = g;
      best_threshold = threshold;
      best_rej_tar = rej_tar;
      best_rej_non = rej_non;
    }
  }
  const double far = static_cast<double>(n_non - best_rej_non) / static_cast<double>(n_non);
  const double frr = static_cast<double>(best_rej_tar) / static_cast<double>(n_tar);
  return {(far + frr) / 2.0, best_threshold};
}

EvalReport evaluate_model(const ModelWeights& weights, const ModelConfig& config, const QuantContext* qctx,
                          const FeatureSet& features, std::span<const Trial> trials, int jobs) {
  if (trials.empty()) throw Error("evaluate_model: no trials");
  std::map<std::string, std::size_t> index;
  std::vector<const Tensor*> inputs;
  for (const auto& t : trials) {
    for (const auto* id : {&t.enroll, &t.test}) {
      if (index.count(*id)) continue;
      auto it = features.utterances.find(*id);
      if (it == features.utterances.end()) throw Error("evaluate_model: unknown utterance id '" + *id + "'");
      index.emplace(*id, inputs.size());
      inputs.push_back(&it->second.features);
    }
  }

  std::vector<Tensor> embeddings(inputs.size());
  std::string failure;
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, jobs))
  for (long i = 0; i < static_cast<long>(inputs.size()); ++i) {
    try {
      embeddings[i] = forward(weights, config, *inputs[i], qctx);
    } catch (const std::exception& e) {
#pragma omp critical
      if (failure.empty()) failure = e.what();
    }
  }
  if (!failure.empty()) throw Error(failure);

  std::vector<ScoredTrial> scored;
  scored.reserve(trials.size());
  EvalReport report;
  for (const auto& t : trials) {
    scored.push_back({cosine_score(embeddings[index.at(t.enroll)].f32(), embeddings[index.at(t.test)].f32()),
                      t.target});
    (t.target ? report.n_target : report.n_nontarget) += 1;
  }
  const auto eer = compute_eer(scored);
  report.eer = eer.eer;
  report.threshold = eer.threshold;
  return report;
}

std::vector<Trial> read_trials(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(path.string() + ": cannot open trial list");
  std::vector<Trial> trials;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::string flag, extra;
    Trial t;
    if (!(ls >> flag >> t.enroll >> t.test) || (ls >> extra) || (flag != "0" && flag != "1"))
      throw Error(path.string() + ":" + std::to_string(lineno) + ": expected '<0|1> <enroll_id> <test_id>'");
    t.target = flag == "1";
    trials.push_back(std::move(t));
  }
  if (trials.empty()) throw Error(path.string() + ": trial list is empty");
  return trials;
}

void write_trials(const std::filesystem::path& path, std::span<const Trial> trials) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  for (const auto& t : trials) out << (t.target ? 1 : 0) << ' ' << t.enroll << ' ' << t.test << '\n';
  if (!out) throw Error(path.string() + ": write failed");
}

}  // namespace qsv
