#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "gaze_sentinel/rng.hpp"
#include "learners_internal.hpp"

namespace gaze_sentinel::learners::detail {

namespace {

// Midpoint between two distinct sorted values that still separates them.
double split_point(double lo, double hi) {
  const double mid = lo + 0.5 * (hi - lo);
  return mid < hi ? mid : lo;
}

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double impurity = 0.0;
};

// n * gini for a two-class count pair.
double weighted_gini(double c0, double c1) {
  const double n = c0 + c1;
  return n > 0.0 ? n - (c0 * c0 + c1 * c1) / n : 0.0;
}

class CartBuilder {
 public:
  CartBuilder(const Dataset& data, int mtry, Rng& rng) : data_(data), mtry_(mtry), rng_(rng) {}

  Tree build(std::vector<std::size_t> rows) {
    rows_ = std::move(rows);
    tree_.nodes.clear();
    struct Pending {
      int node;
      std::size_t begin;
      std::size_t end;
    };
    std::vector<Pending> stack;
    tree_.nodes.emplace_back();
    stack.push_back({0, 0, rows_.size()});
    while (!stack.empty()) {
      const Pending job = stack.back();
      stack.pop_back();
      const std::size_t n = job.end - job.begin;
      std::size_t ones = 0;
      for (std::size_t i = job.begin; i < job.end; ++i) ones += data_.label(rows_[i]) == 1;
      auto& leaf = tree_.nodes[static_cast<std::size_t>(job.node)];
      leaf.value = 2 * ones > n ? 1.0 : 0.0;
      if (ones == 0 || ones == n || n < 2) continue;

      const auto split = find_split(job.begin, job.end);
      if (split.feature < 0) continue;

      auto mid = std::partition(rows_.begin() + static_cast<std::ptrdiff_t>(job.begin),
                                rows_.begin() + static_cast<std::ptrdiff_t>(job.end),
                                [&](std::size_t r) {
                                  return data_.row(r)[static_cast<std::size_t>(split.feature)] <=
                                         split.threshold;
                                });
      const auto split_at = static_cast<std::size_t>(mid - rows_.begin());
      const int left = static_cast<int>(tree_.nodes.size());
      tree_.nodes.emplace_back();
      tree_.nodes.emplace_back();
      auto& node = tree_.nodes[static_cast<std::size_t>(job.node)];
      node.feature = split.feature;
      node.threshold = split.threshold;
      node.left = left;
      node.right = left + 1;
      stack.push_back({left + 1, split_at, job.end});
      stack.push_back({left, job.begin, split_at});
    }
    return std::move(tree_);
  }

 private:
  SplitChoice find_split(std::size_t begin, std::size_t end) {
    const std::size_t p = data_.n_features();
    std::vector<int> order(p);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = 0; i + 1 < p; ++i) {
      std::swap(order[i], order[i + rng_.index(p - i)]);
    }
    SplitChoice best;
    best.impurity = INFINITY;
    // Keep drawing features past mtry until at least one valid split exists.
    for (std::size_t k = 0; k < p; ++k) {
      if (static_cast<int>(k) >= mtry_ && best.feature >= 0) break;
      scan_feature(order[k], begin, end, best);
    }
    return best;
  }

  void scan_feature(int feature, std::size_t begin, std::size_t end, SplitChoice& best) {
    values_.clear();
    for (std::size_t i = begin; i < end; ++i) {
      values_.emplace_back(data_.row(rows_[i])[static_cast<std::size_t>(feature)],
                           data_.label(rows_[i]));
    }
    std::sort(values_.begin(), values_.end());
    double total1 = 0.0;
    for (const auto& v : values_) total1 += v.second;
    const double total0 = static_cast<double>(values_.size()) - total1;
    double l0 = 0.0;
    double l1 = 0.0;
    for (std::size_t i = 0; i + 1 < values_.size(); ++i) {
      (values_[i].second == 1 ? l1 : l0) += 1.0;
      if (!(values_[i].first < values_[i + 1].first)) continue;
      const double impurity = weighted_gini(l0, l1) + weighted_gini(total0 - l0, total1 - l1);
      if (impurity < best.impurity) {
        best = {feature, split_point(values_[i].first, values_[i + 1].first), impurity};
      }
    }
  }

  const Dataset& data_;
  int mtry_;
  Rng& rng_;
  Tree tree_;
  std::vector<std::size_t> rows_;
  std::vector<std::pair<double, int>> values_;
};

Tree make_leaf(double value) {
  Tree t;
  t.nodes.push_back(TreeNode{-1, 0.0, -1, -1, value});
  return t;
}

}  // namespace

ForestModel train_forest(const ForestParams& params, std::uint64_t seed, const Dataset& data) {
  const int mtry = std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(data.n_features())))));
  ForestModel model;
  model.trees.reserve(static_cast<std::size_t>(params.trees));
  for (int t = 0; t < params.trees; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    std::vector<std::size_t> rows(data.size());
    for (auto& r : rows) r = rng.index(data.size());
    CartBuilder builder(data, mtry, rng);
    model.trees.push_back(builder.build(std::move(rows)));
  }
  return model;
}

AdaBoostModel train_adaboost(const AdaBoostParams& params, const Dataset& data) {
  const std::size_t n = data.size();
  const std::size_t p = data.n_features();
  std::vector<double> w(n, 1.0 / static_cast<double>(n));

  // Sorted row order per feature is fixed across rounds.
  std::vector<std::vector<std::size_t>> sorted(p);
  for (std::size_t f = 0; f < p; ++f) {
    sorted[f].resize(n);
    std::iota(sorted[f].begin(), sorted[f].end(), 0);
    std::stable_sort(sorted[f].begin(), sorted[f].end(),
                     [&](std::size_t a, std::size_t b) { return data.row(a)[f] < data.row(b)[f]; });
  }

  AdaBoostModel model;
  for (int round = 0; round < params.rounds; ++round) {
    double w0 = 0.0;
    double w1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) (data.label(i) == 1 ? w1 : w0) += w[i];

    // Constant stump on the weighted majority is the fallback.
    double best_err = std::min(w0, w1);
    Tree best = make_leaf(w1 > w0 ? 1.0 : -1.0);

    for (std::size_t f = 0; f < p; ++f) {
      double l0 = 0.0;
      double l1 = 0.0;
      const auto& order = sorted[f];
      for (std::size_t k = 0; k + 1 < n; ++k) {
        const std::size_t i = order[k];
        (data.label(i) == 1 ? l1 : l0) += w[i];
        const double v = data.row(i)[f];
        const double next = data.row(order[k + 1])[f];
        if (!(v < next)) continue;
        const double err_left0 = l1 + (w0 - l0);  // left -> NF, right -> failure
        const double err_left1 = l0 + (w1 - l1);
        const double err = std::min(err_left0, err_left1);
        if (err < best_err) {
          best_err = err;
          const double left_value = err_left0 <= err_left1 ? -1.0 : 1.0;
          best.nodes = {TreeNode{static_cast<int>(f), split_point(v, next), 1, 2, 0.0},
                        TreeNode{-1, 0.0, -1, -1, left_value},
                        TreeNode{-1, 0.0, -1, -1, -left_value}};
        }
      }
    }

    // Perfect fit: keep the stump with unit weight and stop.
    if (best_err <= 1e-12) {
      model.stumps.push_back(std::move(best));
      model.alphas.push_back(1.0);
      break;
    }
    if (best_err >= 0.5) break;

    const double alpha = std::log((1.0 - best_err) / best_err);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double predicted = best.evaluate(data.row(i));
      const double actual = data.label(i) == 1 ? 1.0 : -1.0;
      if (predicted != actual) w[i] *= std::exp(alpha);
      total += w[i];
    }
    for (auto& wi : w) wi /= total;
    model.stumps.push_back(std::move(best));
    model.alphas.push_back(alpha);
  }
  return model;
}

}  // namespace gaze_sentinel::learners::detail
