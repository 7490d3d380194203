#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gaze_sentinel::learners {

// Row-major labeled design matrix. Labels are 0 (NF) or 1 (failure); every row
// carries the participant it came from so folds can be grouped.
class Dataset {
 public:
  explicit Dataset(std::size_t n_features = 0) : n_features_(n_features) {}

  // Throws Shape on an arity mismatch and InvalidArgument on a label outside {0, 1}.
  void add(std::span<const double> x, int label, int group);

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  std::size_t n_features() const { return n_features_; }

  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * n_features_, n_features_};
  }
  int label(std::size_t i) const { return labels_[i]; }
  int group(std::size_t i) const { return groups_[i]; }

  const std::vector<int>& labels() const { return labels_; }
  const std::vector<int>& groups() const { return groups_; }
  const std::vector<double>& values() const { return values_; }

  std::size_t count(int label) const;

  // Rows whose index appears in `indices`, in that order.
  Dataset subset(std::span<const std::size_t> indices) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::size_t n_features_;
  std::vector<double> values_;
  std::vector<int> labels_;
  std::vector<int> groups_;
};

}  // namespace gaze_sentinel::learners
