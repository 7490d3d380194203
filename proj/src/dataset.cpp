#include "gaze_sentinel/dataset.hpp"

#include <algorithm>
#include <string>

#include "gaze_sentinel/error.hpp"

namespace gaze_sentinel::learners {

void Dataset::add(std::span<const double> x, int label, int group) {
  if (x.size() != n_features_) {
    throw Error(ErrorKind::Shape, "row has " + std::to_string(x.size()) + " features, expected " +
                                      std::to_string(n_features_));
  }
  if (label != 0 && label != 1) {
    throw Error(ErrorKind::InvalidArgument, "labels must be 0 or 1");
  }
  values_.insert(values_.end(), x.begin(), x.end());
  labels_.push_back(label);
  groups_.push_back(group);
}

std::size_t Dataset::count(int label) const {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), label));
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out(n_features_);
  for (std::size_t i : indices) out.add(row(i), labels_[i], groups_[i]);
  return out;
}

}  // namespace gaze_sentinel::learners
