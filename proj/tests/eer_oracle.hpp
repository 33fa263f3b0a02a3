#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "qsv/speaker_eval.hpp"

namespace qsv::testing {

/// Tries every candidate threshold and recounts all trials for each one.
inline EerResult brute_force_eer(std::span<const ScoredTrial> scores) {
  std::vector<double> distinct;
  for (const auto& s : scores) distinct.push_back(s.score);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  std::vector<double> candidates{-std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i + 1 < distinct.size(); ++i) candidates.push_back((distinct[i] + distinct[i + 1]) / 2.0);
  candidates.push_back(std::numeric_limits<double>::infinity());

  std::int64_t nt = 0, nn = 0;
  for (const auto& s : scores) (s.target ? nt : nn) += 1;

  EerResult best{0, 0};
  std::int64_t best_gap = std::numeric_limits<std::int64_t>::max();
  for (double t : candidates) {
    std::int64_t fa = 0, fr = 0;
    for (const auto& s : scores) {
      if (s.target && s.score < t) ++fr;
      if (!s.target && s.score >= t) ++fa;
    }
    const std::int64_t g = std::llabs(fa * nt - fr * nn);
    if (g < best_gap) {
      best_gap = g;
      const double far = static_cast<double>(fa) / static_cast<double>(nn);
      const double frr = static_cast<double>(fr) / static_cast<double>(nt);
      best = {(far + frr) / 2.0, t};
    }
  }
  return best;
}

}  // namespace qsv::testing
