#pragma once

#include <span>
#include <vector>

#include "gaze_sentinel/dataset.hpp"

namespace gaze_sentinel::learners {

// Per-feature z-score with population standard deviation. Zero-variance
// features map to 0.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  std::vector<double> apply(std::span<const double> x) const;

  friend bool operator==(const Standardizer&, const Standardizer&) = default;
};

Standardizer fit_standardizer(const Dataset& train);

}  // namespace gaze_sentinel::learners
