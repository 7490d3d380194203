#include <algorithm>
#include <cmath>
#include <numeric>

#include "gaze_sentinel/rng.hpp"
#include "learners_internal.hpp"

namespace gaze_sentinel::learners::detail {

double logistic(double margin) {
  if (margin >= 0.0) return 1.0 / (1.0 + std::exp(-margin));
  const double e = std::exp(margin);
  return e / (1.0 + e);
}

namespace {

// xgboost's minimum loss reduction for accepting a split.
constexpr double kMinGain = 1e-6;

// Borders per feature for oblivious trees, as in the usual 254-border
// quantization.
constexpr std::size_t kMaxBorders = 254;

double leaf_score(double g, double h, double lambda) { return g * g / (h + lambda); }

double split_midpoint(double lo, double hi) {
  const double mid = lo + 0.5 * (hi - lo);
  return mid < hi ? mid : lo;
}

class NewtonTreeBuilder {
 public:
  NewtonTreeBuilder(const Dataset& data, const std::vector<double>& g, const std::vector<double>& h,
                    const GbtParams& params)
      : data_(data), g_(g), h_(h), params_(params) {}

  Tree build() {
    rows_.resize(data_.size());
    std::iota(rows_.begin(), rows_.end(), 0);
    tree_.nodes.clear();
    tree_.nodes.emplace_back();
    grow(0, 0, rows_.size(), 0);
    return std::move(tree_);
  }

 private:
  void grow(int node, std::size_t begin, std::size_t end, int depth) {
    double G = 0.0;
    double H = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      G += g_[rows_[i]];
      H += h_[rows_[i]];
    }
    const double lambda = params_.l2_leaf;
    tree_.nodes[static_cast<std::size_t>(node)].value = -G / (H + lambda) * params_.learning_rate;
    if (depth >= params_.max_depth || end - begin < 2) return;

    const double parent = leaf_score(G, H, lambda);
    int best_feature = -1;
    double best_threshold = 0.0;
    double best_gain = kMinGain;
    std::vector<std::size_t> order(rows_.begin() + static_cast<std::ptrdiff_t>(begin),
                                   rows_.begin() + static_cast<std::ptrdiff_t>(end));
    for (std::size_t f = 0; f < data_.n_features(); ++f) {
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double va = data_.row(a)[f];
        const double vb = data_.row(b)[f];
        return va < vb || (va == vb && a < b);
      });
      double gl = 0.0;
      double hl = 0.0;
      for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        gl += g_[order[k]];
        hl += h_[order[k]];
        const double v = data_.row(order[k])[f];
        const double next = data_.row(order[k + 1])[f];
        if (!(v < next)) continue;
        const double hr = H - hl;
        if (hl < params_.min_child_weight || hr < params_.min_child_weight) continue;
        const double gain =
            0.5 * (leaf_score(gl, hl, lambda) + leaf_score(G - gl, hr, lambda) - parent);
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = split_midpoint(v, next);
        }
      }
    }
    if (best_feature < 0) return;

    auto mid = std::stable_partition(
        rows_.begin() + static_cast<std::ptrdiff_t>(begin),
        rows_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t r) {
          return data_.row(r)[static_cast<std::size_t>(best_feature)] <= best_threshold;
        });
    const auto split_at = static_cast<std::size_t>(mid - rows_.begin());
    const int left = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    tree_.nodes.emplace_back();
    auto& n = tree_.nodes[static_cast<std::size_t>(node)];
    n.feature = best_feature;
    n.threshold = best_threshold;
    n.left = left;
    n.right = left + 1;
    grow(left, begin, split_at, depth + 1);
    grow(left + 1, split_at, end, depth + 1);
  }

  const Dataset& data_;
  const std::vector<double>& g_;
  const std::vector<double>& h_;
  const GbtParams& params_;
  Tree tree_;
  std::vector<std::size_t> rows_;
};

// Candidate thresholds and per-row bin indices for every feature; a row's bin
// is the number of borders strictly below its value.
struct Quantized {
  std::vector<std::vector<double>> borders;
  std::vector<std::vector<std::uint16_t>> bins;  // [feature][row]
};

Quantized quantize(const Dataset& data) {
  Quantized q;
  const std::size_t p = data.n_features();
  q.borders.resize(p);
  q.bins.resize(p);
  std::vector<double> values(data.size());
  for (std::size_t f = 0; f < p; ++f) {
    for (std::size_t i = 0; i < data.size(); ++i) values[i] = data.row(i)[f];
    std::vector<double> distinct = values;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<double> all;
    for (std::size_t k = 0; k + 1 < distinct.size(); ++k) {
      all.push_back(split_midpoint(distinct[k], distinct[k + 1]));
    }
    auto& borders = q.borders[f];
    if (all.size() <= kMaxBorders) {
      borders = std::move(all);
    } else {
      for (std::size_t j = 0; j < kMaxBorders; ++j) {
        borders.push_back(all[(j * all.size() + all.size() / 2) / kMaxBorders]);
      }
      borders.erase(std::unique(borders.begin(), borders.end()), borders.end());
    }
    q.bins[f].resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      q.bins[f][i] = static_cast<std::uint16_t>(
          std::lower_bound(borders.begin(), borders.end(), values[i]) - borders.begin());
    }
  }
  return q;
}

ObliviousTree build_oblivious(const Dataset& data, const Quantized& q, const std::vector<double>& g,
                              const std::vector<double>& h, const GbtParams& params) {
  const std::size_t n = data.size();
  const double lambda = params.l2_leaf;
  ObliviousTree tree;
  std::vector<std::size_t> leaf_of(n, 0);

  for (int level = 0; level < params.max_depth; ++level) {
    const std::size_t nodes = std::size_t{1} << level;
    std::vector<double> node_g(nodes, 0.0);
    std::vector<double> node_h(nodes, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      node_g[leaf_of[i]] += g[i];
      node_h[leaf_of[i]] += h[i];
    }
    double parent = 0.0;
    for (std::size_t k = 0; k < nodes; ++k) parent += leaf_score(node_g[k], node_h[k], lambda);

    int best_feature = -1;
    std::size_t best_border = 0;
    double best_gain = kMinGain;
    for (std::size_t f = 0; f < q.borders.size(); ++f) {
      const std::size_t nb = q.borders[f].size();
      if (nb == 0) continue;
      const std::size_t bins = nb + 1;
      std::vector<double> hist_g(nodes * bins, 0.0);
      std::vector<double> hist_h(nodes * bins, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t cell = leaf_of[i] * bins + q.bins[f][i];
        hist_g[cell] += g[i];
        hist_h[cell] += h[i];
      }
      // Turn each node's histogram into a running prefix (left side of split j).
      for (std::size_t k = 0; k < nodes; ++k) {
        for (std::size_t b = 1; b < bins; ++b) {
          hist_g[k * bins + b] += hist_g[k * bins + b - 1];
          hist_h[k * bins + b] += hist_h[k * bins + b - 1];
        }
      }
      for (std::size_t j = 0; j < nb; ++j) {
        double score = 0.0;
        for (std::size_t k = 0; k < nodes; ++k) {
          const double gl = hist_g[k * bins + j];
          const double hl = hist_h[k * bins + j];
          score += leaf_score(gl, hl, lambda) + leaf_score(node_g[k] - gl, node_h[k] - hl, lambda);
        }
        const double gain = 0.5 * (score - parent);
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_border = j;
        }
      }
    }
    if (best_feature < 0) break;

    const double threshold = q.borders[static_cast<std::size_t>(best_feature)][best_border];
    tree.features.push_back(best_feature);
    tree.thresholds.push_back(threshold);
    for (std::size_t i = 0; i < n; ++i) {
      if (data.row(i)[static_cast<std::size_t>(best_feature)] > threshold) {
        leaf_of[i] |= std::size_t{1} << level;
      }
    }
  }

  const std::size_t leaves = std::size_t{1} << tree.features.size();
  std::vector<double> leaf_g(leaves, 0.0);
  std::vector<double> leaf_h(leaves, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    leaf_g[leaf_of[i]] += g[i];
    leaf_h[leaf_of[i]] += h[i];
  }
  tree.leaves.resize(leaves);
  for (std::size_t k = 0; k < leaves; ++k) {
    tree.leaves[k] = -leaf_g[k] / (leaf_h[k] + lambda) * params.learning_rate;
  }
  return tree;
}

}  // namespace

GbtModel train_gbt(const GbtParams& params, const Dataset& data) {
  const std::size_t n = data.size();
  GbtModel model;
  model.base_margin = 0.0;
  std::vector<double> margin(n, model.base_margin);
  std::vector<double> g(n);
  std::vector<double> h(n);
  const Quantized q = params.oblivious ? quantize(data) : Quantized{};

  for (int round = 0; round < params.rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = logistic(margin[i]);
      g[i] = p - static_cast<double>(data.label(i));
      h[i] = std::max(p * (1.0 - p), 1e-16);
    }
    if (params.oblivious) {
      auto tree = build_oblivious(data, q, g, h, params);
      for (std::size_t i = 0; i < n; ++i) margin[i] += tree.evaluate(data.row(i));
      model.oblivious.push_back(std::move(tree));
    } else {
      NewtonTreeBuilder builder(data, g, h, params);
      auto tree = builder.build();
      for (std::size_t i = 0; i < n; ++i) margin[i] += tree.evaluate(data.row(i));
      model.trees.push_back(std::move(tree));
    }
  }
  return model;
}

LinearSvmModel train_linear_svm(const LinearSvmParams& params, std::uint64_t seed,
                                const Dataset& data) {
  // Pegasos on the primal 0.5|w|^2 + C * sum(hinge), i.e. lambda = 1 / (C n),
  // with the bias folded in as a constant feature. The returned weights are
  // the average of the iterates over the second half of the epochs.
  const std::size_t n = data.size();
  const std::size_t p = data.n_features();
  const double lambda = 1.0 / (params.c * static_cast<double>(n));
  const double radius = 1.0 / std::sqrt(lambda);

  std::vector<double> w(p + 1, 0.0);
  std::vector<double> avg(p + 1, 0.0);
  std::size_t averaged = 0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, 0x5f3));
  std::uint64_t t = 0;

  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    for (std::size_t i = 0; i + 1 < n; ++i) std::swap(order[i], order[i + rng.index(n - i)]);
    for (std::size_t idx : order) {
      ++t;
      const auto x = data.row(idx);
      const double y = data.label(idx) == 1 ? 1.0 : -1.0;
      double margin = w[p];
      for (std::size_t f = 0; f < p; ++f) margin += w[f] * x[f];
      margin *= y;

      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const double shrink = 1.0 - eta * lambda;
      for (auto& wf : w) wf *= shrink;
      if (margin < 1.0) {
        for (std::size_t f = 0; f < p; ++f) w[f] += eta * y * x[f];
        w[p] += eta * y;
      }
      double norm2 = 0.0;
      for (double wf : w) norm2 += wf * wf;
      if (norm2 > radius * radius) {
        const double s = radius / std::sqrt(norm2);
        for (auto& wf : w) wf *= s;
      }
    }
    if (2 * epoch >= params.epochs) {
      for (std::size_t f = 0; f <= p; ++f) avg[f] += w[f];
      ++averaged;
    }
  }
  if (averaged == 0) {
    avg = w;
    averaged = 1;
  }
  LinearSvmModel model;
  model.weights.assign(avg.begin(), avg.begin() + static_cast<std::ptrdiff_t>(p));
  for (auto& wf : model.weights) wf /= static_cast<double>(averaged);
  model.bias = avg[p] / static_cast<double>(averaged);
  return model;
}

}  // namespace gaze_sentinel::learners::detail
