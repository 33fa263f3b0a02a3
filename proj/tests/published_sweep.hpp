#pragma once

#include "qsv/sensitivity.hpp"

namespace qsv::testing {

/// Full-scale per-layer int8 sweep as published; sizes given there in MB.
inline SensitivityReport published_sweep() {
  const double base_eer = 0.01665, base_mb = 63.571;
  const double eer[7] = {0.01660, 0.01680, 0.01716, 0.01766, 0.01688, 0.01681, 0.01665};
  const double mb[7] = {60.413, 53.501, 53.389, 53.381, 48.365, 56.594, 60.100};
  SensitivityReport r;
  r.baseline_eer = base_eer;
  r.baseline_size = static_cast<std::uint64_t>(base_mb * 1e6 + 0.5);
  for (std::size_t i = 0; i < 7; ++i) {
    const auto size = static_cast<std::uint64_t>(mb[i] * 1e6 + 0.5);
    r.rows.push_back({kAllLayers[i], eer[i], size, eer[i] - r.baseline_eer,
                      static_cast<std::int64_t>(size) - static_cast<std::int64_t>(r.baseline_size)});
  }
  return r;
}

}  // namespace qsv::testing
