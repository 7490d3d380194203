#pragma once

#include <cstdint>
#include <span>

#include "gaze_sentinel/classifiers.hpp"

namespace gaze_sentinel::learners::detail {

ForestModel train_forest(const ForestParams& params, std::uint64_t seed, const Dataset& data);
AdaBoostModel train_adaboost(const AdaBoostParams& params, const Dataset& data);
GbtModel train_gbt(const GbtParams& params, const Dataset& data);
LinearSvmModel train_linear_svm(const LinearSvmParams& params, std::uint64_t seed,
                                const Dataset& standardized);

double logistic(double margin);

}  // namespace gaze_sentinel::learners::detail
