#include "qsv/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "qsv/error.hpp"

namespace qsv {

double CalibStats::std() const { return std::sqrt(std::max(0.0, variance())); }

std::size_t CalibStats::bin_of(double v) const {
  if (hist_hi <= hist_lo) return 0;
  const double pos = (v - hist_lo) / (hist_hi - hist_lo) * static_cast<double>(bins);
  if (pos <= 0.0) return 0;
  return std::min(bins - 1, static_cast<std::size_t>(pos));
}

void CalibStats::rebin(double lo, double hi) {
  std::vector<std::uint64_t> moved(bins, 0);
  const double old_lo = hist_lo;
  const double width = (hist_hi - hist_lo) / static_cast<double>(bins);
  hist_lo = lo;
  hist_hi = hi;
  for (std::size_t i = 0; i < histogram.size(); ++i) {
    if (!histogram[i]) continue;
    const double centre = width > 0.0 ? old_lo + (static_cast<double>(i) + 0.5) * width : old_lo;
    moved[bin_of(centre)] += histogram[i];
  }
  histogram = std::move(moved);
}

void CalibStats::observe(std::span<const float> values) {
  if (values.empty()) return;
  double lo = values[0];
  double hi = values[0];
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (!std::isfinite(v))
      throw Error("calibration '" + name + "': non-finite value at index " + std::to_string(i));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    sum += v;
  }
  CalibStats chunk(name, 0);
  chunk.count = values.size();
  chunk.min = lo;
  chunk.max = hi;
  chunk.mean = sum / static_cast<double>(values.size());
  for (auto v : values) chunk.m2 += (v - chunk.mean) * (v - chunk.mean);

  if (bins > 0) {
    if (histogram.empty()) {
      histogram.assign(bins, 0);
      hist_lo = lo;
      hist_hi = hi;
    } else if (lo < hist_lo || hi > hist_hi) {
      rebin(std::min(lo, hist_lo), std::max(hi, hist_hi));
    }
    for (auto v : values) ++histogram[bin_of(v)];
  }

  merge(chunk);
}

void CalibStats::merge(const CalibStats& other) {
  if (other.count == 0) return;
  if (bins > 0 && !other.histogram.empty()) {
    if (other.bins != bins) throw Error("calibration: cannot merge histograms with different bin counts");
    if (histogram.empty()) {
      histogram = other.histogram;
      hist_lo = other.hist_lo;
      hist_hi = other.hist_hi;
    } else {
      const double lo = std::min(hist_lo, other.hist_lo);
      const double hi = std::max(hist_hi, other.hist_hi);
      if (lo < hist_lo || hi > hist_hi) rebin(lo, hi);
      CalibStats aligned = other;
      if (aligned.hist_lo != lo || aligned.hist_hi != hi) aligned.rebin(lo, hi);
      for (std::size_t i = 0; i < bins; ++i) histogram[i] += aligned.histogram[i];
    }
  }
  if (count == 0) {
    min = other.min;
    max = other.max;
    mean = other.mean;
    m2 = other.m2;
    count = other.count;
    return;
  }
  const double na = static_cast<double>(count);
  const double nb = static_cast<double>(other.count);
  const double n = na + nb;
  const double delta = other.mean - mean;
  mean += delta * nb / n;
  m2 += other.m2 + delta * delta * na * nb / n;
  count += other.count;
  min = std::min(min, other.min);
  max = std::max(max, other.max);
}

Observer Observer::make_percentile(double p, std::size_t bins) {
  if (!(p > 0.5 && p <= 1.0)) throw Error("percentile observer needs p in (0.5, 1]");
  if (bins == 0) throw Error("percentile observer needs at least one histogram bin");
  Observer o;
  o.kind = Kind::percentile;
  o.percentile = p;
  o.bins = bins;
  return o;
}

Observer Observer::parse(const std::string& text) {
  if (text == "minmax") return minmax();
  const std::string prefix = "percentile:";
  if (text.rfind(prefix, 0) == 0) {
    const auto arg = text.substr(prefix.size());
    char* end = nullptr;
    const double p = std::strtod(arg.c_str(), &end);
    if (arg.empty() || *end != '\0') throw Error("observer: bad percentile '" + arg + "'");
    return make_percentile(p);
  }
  throw Error("observer: expected 'minmax' or 'percentile:<p>', got '" + text + "'");
}

std::string Observer::str() const {
  if (kind == Kind::minmax) return "minmax";
  std::ostringstream os;
  os << "percentile:" << percentile;
  return os.str();
}

Range finalize(const CalibStats& stats, const Observer& observer) {
  if (stats.count == 0) throw Error("finalize: stats '" + stats.name + "' have no observations");
  if (observer.kind == Observer::Kind::minmax) return {stats.min, stats.max};
  if (stats.histogram.empty())
    throw Error("finalize: percentile observer needs a histogram for '" + stats.name + "'");

  const auto& h = stats.histogram;
  const double tail = (1.0 - observer.percentile) / 2.0 * static_cast<double>(stats.count);
  const double width = (stats.hist_hi - stats.hist_lo) / static_cast<double>(h.size());
  std::size_t first = 0;
  double cum = 0.0;
  for (; first < h.size(); ++first) {
    cum += static_cast<double>(h[first]);
    if (cum > tail) break;
  }
  std::size_t last = h.size() - 1;
  cum = 0.0;
  for (;; --last) {
    cum += static_cast<double>(h[last]);
    if (cum > tail || last == 0) break;
  }
  double lo = stats.hist_lo + static_cast<double>(first) * width;
  double hi = stats.hist_lo + static_cast<double>(last + 1) * width;
  lo = std::clamp(lo, stats.min, stats.max);
  hi = std::clamp(hi, stats.min, stats.max);
  if (lo > hi) std::swap(lo, hi);
  return {lo, hi};
}

}  // namespace qsv
