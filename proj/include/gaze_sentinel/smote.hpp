#pragma once

#include <cstddef>
#include <vector>

#include "gaze_sentinel/dataset.hpp"
#include "gaze_sentinel/rng.hpp"

namespace gaze_sentinel::learners {

inline constexpr int kSmoteNeighbors = 2;

// Indices (into the minority rows of `data`, in dataset order) of each minority
// row's k nearest same-class neighbors by Euclidean distance; ties go to the
// lower row index.
std::vector<std::vector<std::size_t>> minority_neighbors(const Dataset& data, int minority_label,
                                                         int k);

// Upsamples the minority class to the majority count. The input rows are
// returned first, unchanged and in order; synthetic rows follow and inherit the
// participant of the row they were interpolated from. Balanced input is
// returned as is. Throws InsufficientMinority when the minority class has at
// most k rows.
Dataset smote(const Dataset& train, int k, Rng& rng);

}  // namespace gaze_sentinel::learners
