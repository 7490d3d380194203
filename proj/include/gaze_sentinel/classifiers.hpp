#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gaze_sentinel/dataset.hpp"
#include "gaze_sentinel/standardizer.hpp"

namespace gaze_sentinel::learners {

inline constexpr int kModelSchemaVersion = 2;

struct ForestParams {
  int trees = 100;
  friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

struct AdaBoostParams {
  int rounds = 100;
  friend bool operator==(const AdaBoostParams&, const AdaBoostParams&) = default;
};

// Newton-boosted trees on logistic loss. Oblivious trees share one split per
// level.
struct GbtParams {
  int rounds = 100;
  double learning_rate = 0.01;
  int max_depth = 6;
  bool oblivious = false;
  double l2_leaf = 1.0;
  double min_child_weight = 1.0;
  friend bool operator==(const GbtParams&, const GbtParams&) = default;
};

struct LinearSvmParams {
  double c = 1.0;
  int epochs = 100;
  friend bool operator==(const LinearSvmParams&, const LinearSvmParams&) = default;
};

enum class ClassifierKind { Forest, Ada, GbtA, LinearSvm, GbtB };

inline constexpr ClassifierKind kAllClassifiers[] = {
    ClassifierKind::Forest, ClassifierKind::Ada, ClassifierKind::GbtA, ClassifierKind::LinearSvm,
    ClassifierKind::GbtB,
};

std::string_view to_string(ClassifierKind kind);  // forest, ada, gbt-a, svm, gbt-b
std::optional<ClassifierKind> parse_classifier(std::string_view name);

struct ClassifierConfig {
  std::variant<ForestParams, AdaBoostParams, GbtParams, LinearSvmParams> params;
  std::uint64_t seed = 0;

  ClassifierKind kind() const;
  // Canonical text form of every hyperparameter and the seed.
  std::string canonical() const;
  // 16 hex digits of FNV-1a over canonical().
  std::string fingerprint() const;

  friend bool operator==(const ClassifierConfig&, const ClassifierConfig&) = default;
};

// Hyperparameters as published for each learner.
ClassifierConfig make_config(ClassifierKind kind, std::uint64_t seed = 0);

// Binary split tree in flat storage; a node with feature < 0 is a leaf.
// Samples with x[feature] <= threshold go left.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct Tree {
  std::vector<TreeNode> nodes;

  double evaluate(std::span<const double> x) const;
  int depth() const;
  friend bool operator==(const Tree&, const Tree&) = default;
};

// Level l sends x right when x[features[l]] > thresholds[l]; the leaf index
// has bit l set for a right turn at level l.
struct ObliviousTree {
  std::vector<int> features;
  std::vector<double> thresholds;
  std::vector<double> leaves;

  double evaluate(std::span<const double> x) const;
  friend bool operator==(const ObliviousTree&, const ObliviousTree&) = default;
};

struct ForestModel {
  std::vector<Tree> trees;  // leaf values are class votes (0 or 1)
  friend bool operator==(const ForestModel&, const ForestModel&) = default;
};

struct AdaBoostModel {
  std::vector<Tree> stumps;  // leaf values are -1 or +1
  std::vector<double> alphas;
  friend bool operator==(const AdaBoostModel&, const AdaBoostModel&) = default;
};

struct GbtModel {
  double base_margin = 0.0;
  std::vector<Tree> trees;               // leaves already scaled by the learning rate
  std::vector<ObliviousTree> oblivious;  // used instead of `trees` for oblivious boosting
  friend bool operator==(const GbtModel&, const GbtModel&) = default;
};

struct LinearSvmModel {
  std::vector<double> weights;
  double bias = 0.0;
  friend bool operator==(const LinearSvmModel&, const LinearSvmModel&) = default;
};

using ModelParams = std::variant<ForestModel, AdaBoostModel, GbtModel, LinearSvmModel>;

struct Prediction {
  int label = 0;
  // Vote fraction (forest), normalized weighted margin (AdaBoost), raw margin
  // (SVM) or logistic probability (boosted trees).
  double score = 0.0;
  friend bool operator==(const Prediction&, const Prediction&) = default;
};

class TrainedModel {
 public:
  TrainedModel(ClassifierConfig config, std::size_t n_features,
               std::optional<Standardizer> standardizer, ModelParams params);

  const ClassifierConfig& config() const { return config_; }
  std::size_t n_features() const { return n_features_; }
  const std::optional<Standardizer>& standardizer() const { return standardizer_; }
  const ModelParams& params() const { return params_; }

  // Throws Shape when x does not have n_features() entries.
  Prediction predict(std::span<const double> x) const;

  // Raw boosted margin after the first `rounds` trees (all when negative).
  // Only meaningful for boosted-tree models.
  double gbt_margin(std::span<const double> x, int rounds = -1) const;

  friend bool operator==(const TrainedModel&, const TrainedModel&) = default;

 private:
  ClassifierConfig config_;
  std::size_t n_features_;
  std::optional<Standardizer> standardizer_;
  ModelParams params_;
};

// Throws DegenerateData unless both classes are present.
TrainedModel train(const ClassifierConfig& config, const Dataset& data);

// Mean logistic loss on `data` after each boosting round (entry 0 is the
// initial model). Throws InvalidArgument for non-boosted models.
std::vector<double> gbt_loss_trace(const TrainedModel& model, const Dataset& data);

}  // namespace gaze_sentinel::learners
