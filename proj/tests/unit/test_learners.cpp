#include <algorithm>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "gaze_sentinel/classifiers.hpp"
#include "gaze_sentinel/error.hpp"
#include "gaze_sentinel/smote.hpp"
#include "gaze_sentinel/standardizer.hpp"
#include "support/oracles.hpp"

using namespace gaze_sentinel;
using namespace gaze_sentinel::learners;

namespace {

std::vector<int> predict_all(const TrainedModel& model, const Dataset& data) {
  std::vector<int> out;
  for (std::size_t i = 0; i < data.size(); ++i) out.push_back(model.predict(data.row(i)).label);
  return out;
}

Dataset random_imbalanced(std::size_t majority, std::size_t minority, std::uint64_t seed, std::size_t dims = 3) {
  Rng rng(seed);
  Dataset d(dims);
  std::vector<double> row(dims);
  for (std::size_t i = 0; i < majority + minority; ++i) {
    const int y = i < majority ? 0 : 1;
    for (auto& v : row) v = rng.normal() + 2.0 * y;
    d.add(row, y, static_cast<int>(i % 5));
  }
  return d;
}

}  // namespace

TEST_CASE("dataset rejects bad rows") {
  Dataset d(2);
  const double two[2] = {1, 2};
  const double three[3] = {1, 2, 3};
  CHECK_THROWS_AS(d.add(three, 0, 0), Error);
  CHECK_THROWS_AS(d.add(two, 2, 0), Error);
  d.add(two, 1, 4);
  CHECK(d.count(1) == 1);
  const std::size_t idx[] = {0};
  CHECK(d.subset(idx) == d);
}

TEST_CASE("smote leaves balanced input unchanged") {
  Dataset d(1);
  for (int i = 0; i < 6; ++i) {
    const double x[1] = {static_cast<double>(i)};
    d.add(x, i % 2, i);
  }
  Rng rng(1);
  CHECK(smote(d, 2, rng) == d);
}

TEST_CASE("smote on collinear minority") {
  Dataset d(2);
  for (int i = 0; i < 9; ++i) {
    const double x[2] = {10.0 + i, 5.0};
    d.add(x, 0, i);
  }
  for (int i = 0; i < 3; ++i) {
    const double x[2] = {static_cast<double>(i), 0.0};
    d.add(x, 1, 20 + i);
  }
  Rng rng(3);
  const auto out = smote(d, 2, rng);
  REQUIRE(out.size() == 18);
  for (std::size_t i = d.size(); i < out.size(); ++i) {
    CHECK(out.label(i) == 1);
    CHECK(out.row(i)[1] == 0.0);
    CHECK(out.row(i)[0] >= 0.0);
    CHECK(out.row(i)[0] <= 2.0);
  }
}

TEST_CASE("smote 24 vs 4 against the neighbor oracle") {
  const auto d = random_imbalanced(24, 4, 11);
  Rng rng(5);
  const auto out = smote(d, kSmoteNeighbors, rng);
  CHECK(out.count(0) == 24);
  CHECK(out.count(1) == 24);
  CHECK(out.size() - d.size() == 20);
  CHECK(oracle::smote_valid(d, out, kSmoteNeighbors));
}

TEST_CASE("smote neighbor ties go to the lower index") {
  Dataset d(1);
  const double xs[] = {0.0, 1.0, -1.0, 3.0};
  for (double x : xs) {
    const double row[1] = {x};
    d.add(row, 1, 0);
  }
  for (int i = 0; i < 8; ++i) {
    const double row[1] = {50.0 + i};
    d.add(row, 0, 0);
  }
  const auto nn = minority_neighbors(d, 1, 1);
  REQUIRE(nn.size() == 4);
  CHECK(nn[0] == std::vector<std::size_t>{1});
}

TEST_CASE("smote needs more than k minority rows") {
  const auto d = random_imbalanced(10, 2, 2);
  Rng rng(1);
  try {
    smote(d, 2, rng);
    FAIL("expected InsufficientMinority");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InsufficientMinority);
  }
}

TEST_CASE("standardizer") {
  Dataset d(2);
  const double a[2] = {0.0, 3.0};
  const double b[2] = {2.0, 3.0};
  d.add(a, 0, 0);
  d.add(b, 1, 0);
  const auto s = fit_standardizer(d);
  CHECK(s.mean[0] == 1.0);
  CHECK(s.scale[0] == 1.0);
  CHECK(s.apply(a) == std::vector<double>{-1.0, 0.0});
  CHECK(s.apply(b) == std::vector<double>{1.0, 0.0});
}

TEST_CASE("every classifier fits a separable set") {
  const auto d = oracle::separable_blobs(30, 8);
  for (auto kind : kAllClassifiers) {
    CAPTURE(to_string(kind));
    const auto model = train(make_config(kind, 3), d);
    CHECK(oracle::accuracy(d.labels(), predict_all(model, d)) == 1.0);
  }
}

TEST_CASE("trainers are deterministic in the seed") {
  const auto d = random_imbalanced(40, 30, 4);
  for (auto kind : kAllClassifiers) {
    CAPTURE(to_string(kind));
    CHECK(train(make_config(kind, 9), d) == train(make_config(kind, 9), d));
  }
  CHECK(!(train(make_config(ClassifierKind::Forest, 9), d) == train(make_config(ClassifierKind::Forest, 10), d)));
}

TEST_CASE("forest separates XOR where the linear model cannot") {
  const auto tr = oracle::xor_set(100, 31);
  const auto te = oracle::xor_set(200, 32);
  const auto forest = train(make_config(ClassifierKind::Forest, 1), tr);
  const auto svm = train(make_config(ClassifierKind::LinearSvm, 1), tr);
  CHECK(oracle::accuracy(te.labels(), predict_all(forest, te)) >= 0.9);
  const double svm_acc = oracle::accuracy(te.labels(), predict_all(svm, te));
  CHECK(svm_acc >= 0.35);
  CHECK(svm_acc <= 0.65);
}

TEST_CASE("single-class training is degenerate") {
  Dataset d(1);
  for (int i = 0; i < 5; ++i) {
    const double x[1] = {static_cast<double>(i)};
    d.add(x, 0, i);
  }
  for (auto kind : kAllClassifiers) {
    try {
      train(make_config(kind), d);
      FAIL("expected DegenerateData");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::DegenerateData);
    }
  }
}

TEST_CASE("hand-built models") {
  Tree vote_one;
  vote_one.nodes = {TreeNode{-1, 0.0, -1, -1, 1.0}};
  const TrainedModel forest(make_config(ClassifierKind::Forest), 2, std::nullopt,
                            ForestModel{{vote_one, vote_one, vote_one}});
  const double x[2] = {3.0, -1.0};
  CHECK(forest.predict(x).score == 1.0);
  CHECK(forest.predict(x).label == 1);

  const TrainedModel svm(make_config(ClassifierKind::LinearSvm), 2, std::nullopt, LinearSvmModel{{0.0, 0.0}, 0.0});
  CHECK(svm.predict(x).label == 0);
  CHECK(svm.predict(x).score == 0.0);

  Tree zero;
  zero.nodes = {TreeNode{0, 1.0, 1, 2, 0.0}, TreeNode{-1, 0, -1, -1, 0.0}, TreeNode{-1, 0, -1, -1, 0.0}};
  const TrainedModel gbt(make_config(ClassifierKind::GbtA), 2, std::nullopt, GbtModel{0.0, {zero, zero}, {}});
  CHECK(gbt.predict(x).score == 0.5);

  const double wrong[3] = {1, 2, 3};
  try {
    gbt.predict(wrong);
    FAIL("expected Shape");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Shape);
  }
}

TEST_CASE("boosting loss never increases") {
  const auto d = random_imbalanced(50, 40, 6);
  for (auto kind : {ClassifierKind::GbtA, ClassifierKind::GbtB}) {
    const auto model = train(make_config(kind, 2), d);
    const auto trace = gbt_loss_trace(model, d);
    REQUIRE(trace.size() == 101);
    for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-12);
  }
  CHECK_THROWS_AS(gbt_loss_trace(train(make_config(ClassifierKind::Forest), d), d), Error);
}

TEST_CASE("linear svm ignores a consistent feature permutation") {
  const auto d = random_imbalanced(30, 30, 12, 3);
  Dataset permuted(3);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto r = d.row(i);
    const double p[3] = {r[2], r[0], r[1]};
    permuted.add(p, d.label(i), d.group(i));
  }
  const auto a = train(make_config(ClassifierKind::LinearSvm, 4), d);
  const auto b = train(make_config(ClassifierKind::LinearSvm, 4), permuted);
  Rng rng(77);
  for (int i = 0; i < 200; ++i) {
    const double x[3] = {rng.normal(), rng.normal(), rng.normal()};
    const double px[3] = {x[2], x[0], x[1]};
    CHECK(a.predict(x).label == b.predict(px).label);
  }
}

TEST_CASE("forest votes are fractions") {
  const auto d = random_imbalanced(30, 30, 13);
  const auto model = train(make_config(ClassifierKind::Forest, 1), d);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double s = model.predict(d.row(i)).score;
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
  }
}

TEST_CASE("classifier names and fingerprints") {
  for (auto kind : kAllClassifiers) CHECK(parse_classifier(to_string(kind)) == kind);
  const auto a = make_config(ClassifierKind::GbtB, 1);
  CHECK(a.fingerprint().size() == 16);
  CHECK(a.fingerprint() != make_config(ClassifierKind::GbtB, 2).fingerprint());
}
