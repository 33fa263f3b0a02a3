#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qsv/tensor.hpp"

namespace qsv {

inline constexpr std::size_t kDefaultHistogramBins = 2048;

/// Running statistics of one activation or weight tensor.
///
/// Mean and spread are tracked as (mean, m2) with Chan's pairwise update so
/// that chunked observation and shard merging agree with a single pass up to
/// rounding. When `bins > 0` a fixed-size histogram spans [hist_lo, hist_hi];
/// whenever the observed range grows, existing counts move to the bin that
/// contains their old bin centre.
struct CalibStats {
  std::string name;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double m2 = 0.0;
  std::uint64_t count = 0;

  std::size_t bins = 0;
  double hist_lo = 0.0;
  double hist_hi = 0.0;
  std::vector<std::uint64_t> histogram;

  CalibStats() = default;
  explicit CalibStats(std::string name, std::size_t bins = 0) : name(std::move(name)), bins(bins) {}

  double variance() const { return count ? m2 / static_cast<double>(count) : 0.0; }
  double std() const;
  bool has_histogram() const { return bins > 0; }

  void observe(std::span<const float> values);
  void observe(const Tensor& x) { observe(x.f32()); }
  /// Order-insensitive for min/max/count; mean/m2 agree up to rounding.
  void merge(const CalibStats& other);

  bool operator==(const CalibStats&) const = default;

 private:
  void rebin(double lo, double hi);
  std::size_t bin_of(double v) const;
};

struct Observer {
  enum class Kind { minmax, percentile };
  Kind kind = Kind::minmax;
  double percentile = 1.0;  // in (0.5, 1]
  std::size_t bins = kDefaultHistogramBins;

  static Observer minmax() { return {}; }
  static Observer make_percentile(double p, std::size_t bins = kDefaultHistogramBins);
  /// "minmax" or "percentile:<p>".
  static Observer parse(const std::string& text);
  std::string str() const;

  /// Histogram bins an observed CalibStats needs for this observer.
  std::size_t histogram_bins() const { return kind == Kind::percentile ? bins : 0; }
};

struct Range {
  double lo;
  double hi;
};

/// minmax: the exact observed extremes. percentile(p): the tightest
/// histogram-bin range that keeps p of the mass, trimming (1 - p) / 2 from
/// each tail; always inside the minmax range.
Range finalize(const CalibStats& stats, const Observer& observer);

}  // namespace qsv
