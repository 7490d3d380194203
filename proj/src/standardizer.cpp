#include "gaze_sentinel/standardizer.hpp"

#include <algorithm>
#include <cmath>

#include "gaze_sentinel/error.hpp"

namespace gaze_sentinel::learners {

Standardizer fit_standardizer(const Dataset& train) {
  if (train.empty()) throw Error(ErrorKind::DegenerateData, "cannot standardize an empty dataset");
  const std::size_t p = train.n_features();
  const double n = static_cast<double>(train.size());
  Standardizer s{std::vector<double>(p, 0.0), std::vector<double>(p, 0.0)};
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto x = train.row(i);
    for (std::size_t f = 0; f < p; ++f) s.mean[f] += x[f];
  }
  for (auto& m : s.mean) m /= n;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto x = train.row(i);
    for (std::size_t f = 0; f < p; ++f) s.scale[f] += (x[f] - s.mean[f]) * (x[f] - s.mean[f]);
  }
  for (std::size_t f = 0; f < p; ++f) {
    const double sd = std::sqrt(s.scale[f] / n);
    // Relative floor: rounding noise on a constant column is not variance.
    s.scale[f] = sd > 1e-12 * std::max(1.0, std::abs(s.mean[f])) ? sd : 0.0;
  }
  return s;
}

std::vector<double> Standardizer::apply(std::span<const double> x) const {
  if (x.size() != mean.size()) {
    throw Error(ErrorKind::Shape, "standardizer arity mismatch");
  }
  std::vector<double> z(x.size());
  for (std::size_t f = 0; f < x.size(); ++f) {
    z[f] = scale[f] > 0.0 ? (x[f] - mean[f]) / scale[f] : 0.0;
  }
  return z;
}

}  // namespace gaze_sentinel::learners
