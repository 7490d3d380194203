#include "gaze_sentinel/classifiers.hpp"

#include <cmath>
#include <cstdio>

#include "gaze_sentinel/error.hpp"
#include "learners_internal.hpp"

namespace gaze_sentinel::learners {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::string_view to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::Forest: return "forest";
    case ClassifierKind::Ada: return "ada";
    case ClassifierKind::GbtA: return "gbt-a";
    case ClassifierKind::LinearSvm: return "svm";
    case ClassifierKind::GbtB: return "gbt-b";
  }
  return "?";
}

std::optional<ClassifierKind> parse_classifier(std::string_view name) {
  for (auto kind : kAllClassifiers) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

ClassifierKind ClassifierConfig::kind() const {
  return std::visit(overloaded{
                        [](const ForestParams&) { return ClassifierKind::Forest; },
                        [](const AdaBoostParams&) { return ClassifierKind::Ada; },
                        [](const GbtParams& p) {
                          return p.oblivious ? ClassifierKind::GbtB : ClassifierKind::GbtA;
                        },
                        [](const LinearSvmParams&) { return ClassifierKind::LinearSvm; },
                    },
                    params);
}

std::string ClassifierConfig::canonical() const {
  std::string body = std::visit(
      overloaded{
          [](const ForestParams& p) { return "forest;trees=" + std::to_string(p.trees); },
          [](const AdaBoostParams& p) { return "ada;rounds=" + std::to_string(p.rounds); },
          [](const GbtParams& p) {
            return std::string("gbt;rounds=") + std::to_string(p.rounds) +
                   ";lr=" + format_double(p.learning_rate) +
                   ";depth=" + std::to_string(p.max_depth) +
                   ";oblivious=" + (p.oblivious ? "1" : "0") + ";l2=" + format_double(p.l2_leaf) +
                   ";mcw=" + format_double(p.min_child_weight);
          },
          [](const LinearSvmParams& p) {
            return "svm;c=" + format_double(p.c) + ";epochs=" + std::to_string(p.epochs);
          },
      },
      params);
  return body + ";seed=" + std::to_string(seed);
}

std::string ClassifierConfig::fingerprint() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical())));
  return buf;
}

ClassifierConfig make_config(ClassifierKind kind, std::uint64_t seed) {
  ClassifierConfig config;
  config.seed = seed;
  switch (kind) {
    case ClassifierKind::Forest: config.params = ForestParams{100}; break;
    case ClassifierKind::Ada: config.params = AdaBoostParams{100}; break;
    case ClassifierKind::GbtA: config.params = GbtParams{100, 0.01, 6, false}; break;
    case ClassifierKind::LinearSvm: config.params = LinearSvmParams{1.0, 100}; break;
    case ClassifierKind::GbtB: config.params = GbtParams{100, 0.1, 6, true}; break;
  }
  return config;
}

double Tree::evaluate(std::span<const double> x) const {
  int i = 0;
  while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(i)].value;
}

int Tree::depth() const {
  std::vector<int> level(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (nodes[i].feature >= 0) {
      level[static_cast<std::size_t>(nodes[i].left)] = level[i] + 1;
      level[static_cast<std::size_t>(nodes[i].right)] = level[i] + 1;
    }
  }
  return deepest;
}

double ObliviousTree::evaluate(std::span<const double> x) const {
  std::size_t leaf = 0;
  for (std::size_t l = 0; l < features.size(); ++l) {
    if (x[static_cast<std::size_t>(features[l])] > thresholds[l]) leaf |= std::size_t{1} << l;
  }
  return leaves[leaf];
}

TrainedModel::TrainedModel(ClassifierConfig config, std::size_t n_features,
                           std::optional<Standardizer> standardizer, ModelParams params)
    : config_(std::move(config)),
      n_features_(n_features),
      standardizer_(std::move(standardizer)),
      params_(std::move(params)) {
  if (standardizer_ && standardizer_->mean.size() != n_features_) {
    throw Error(ErrorKind::Shape, "standardizer arity does not match model arity");
  }
}

double TrainedModel::gbt_margin(std::span<const double> x, int rounds) const {
  const auto* gbt = std::get_if<GbtModel>(&params_);
  if (!gbt) throw Error(ErrorKind::InvalidArgument, "model is not a boosted-tree model");
  double margin = gbt->base_margin;
  const std::size_t total = gbt->trees.size() + gbt->oblivious.size();
  const std::size_t limit = rounds < 0 ? total : std::min(total, static_cast<std::size_t>(rounds));
  for (std::size_t r = 0; r < limit; ++r) {
    margin += gbt->oblivious.empty() ? gbt->trees[r].evaluate(x) : gbt->oblivious[r].evaluate(x);
  }
  return margin;
}

Prediction TrainedModel::predict(std::span<const double> x) const {
  if (x.size() != n_features_) {
    throw Error(ErrorKind::Shape, "model expects " + std::to_string(n_features_) +
                                      " features, got " + std::to_string(x.size()));
  }
  return std::visit(
      overloaded{
          [&](const ForestModel& m) {
            int votes = 0;
            for (const auto& tree : m.trees) votes += tree.evaluate(x) > 0.5 ? 1 : 0;
            const double score =
                m.trees.empty() ? 0.0 : static_cast<double>(votes) / static_cast<double>(m.trees.size());
            return Prediction{score > 0.5 ? 1 : 0, score};
          },
          [&](const AdaBoostModel& m) {
            double num = 0.0;
            double den = 0.0;
            for (std::size_t t = 0; t < m.stumps.size(); ++t) {
              num += m.alphas[t] * m.stumps[t].evaluate(x);
              den += m.alphas[t];
            }
            const double score = den > 0.0 ? num / den : 0.0;
            return Prediction{score > 0.0 ? 1 : 0, score};
          },
          [&](const GbtModel&) {
            const double p = detail::logistic(gbt_margin(x));
            return Prediction{p > 0.5 ? 1 : 0, p};
          },
          [&](const LinearSvmModel& m) {
            const auto z = standardizer_ ? standardizer_->apply(x)
                                         : std::vector<double>(x.begin(), x.end());
            double margin = m.bias;
            for (std::size_t f = 0; f < z.size(); ++f) margin += m.weights[f] * z[f];
            return Prediction{margin > 0.0 ? 1 : 0, margin};
          },
      },
      params_);
}

TrainedModel train(const ClassifierConfig& config, const Dataset& data) {
  if (data.count(0) == 0 || data.count(1) == 0) {
    throw Error(ErrorKind::DegenerateData, "training data must contain both classes");
  }
  return std::visit(
      overloaded{
          [&](const ForestParams& p) {
            return TrainedModel(config, data.n_features(), std::nullopt,
                                detail::train_forest(p, config.seed, data));
          },
          [&](const AdaBoostParams& p) {
            return TrainedModel(config, data.n_features(), std::nullopt,
                                detail::train_adaboost(p, data));
          },
          [&](const GbtParams& p) {
            return TrainedModel(config, data.n_features(), std::nullopt, detail::train_gbt(p, data));
          },
          [&](const LinearSvmParams& p) {
            auto standardizer = fit_standardizer(data);
            Dataset z(data.n_features());
            for (std::size_t i = 0; i < data.size(); ++i) {
              z.add(standardizer.apply(data.row(i)), data.label(i), data.group(i));
            }
            auto svm = detail::train_linear_svm(p, config.seed, z);
            return TrainedModel(config, data.n_features(), std::move(standardizer), std::move(svm));
          },
      },
      config.params);
}

std::vector<double> gbt_loss_trace(const TrainedModel& model, const Dataset& data) {
  const auto* gbt = std::get_if<GbtModel>(&model.params());
  if (!gbt) throw Error(ErrorKind::InvalidArgument, "loss trace requires a boosted-tree model");
  const int rounds = static_cast<int>(gbt->trees.size() + gbt->oblivious.size());
  std::vector<double> trace;
  std::vector<double> margin(data.size(), gbt->base_margin);
  auto mean_loss = [&] {
    double loss = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double m = margin[i];
      // log(1 + e^-m) for y = 1, log(1 + e^m) for y = 0, computed stably.
      const double s = data.label(i) == 1 ? -m : m;
      loss += s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
    }
    return loss / static_cast<double>(data.size());
  };
  trace.push_back(mean_loss());
  for (int r = 0; r < rounds; ++r) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      margin[i] += gbt->oblivious.empty() ? gbt->trees[static_cast<std::size_t>(r)].evaluate(data.row(i))
                                          : gbt->oblivious[static_cast<std::size_t>(r)].evaluate(data.row(i));
    }
    trace.push_back(mean_loss());
  }
  return trace;
}

}  // namespace gaze_sentinel::learners
