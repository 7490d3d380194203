#include "gaze_sentinel/smote.hpp"

#include <algorithm>
#include <string>
#include <utility>

#include "gaze_sentinel/error.hpp"

namespace gaze_sentinel::learners {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return d;
}

std::vector<std::size_t> rows_with_label(const Dataset& data, int label) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.label(i) == label) rows.push_back(i);
  }
  return rows;
}

}  // namespace

std::vector<std::vector<std::size_t>> minority_neighbors(const Dataset& data, int minority_label,
                                                         int k) {
  const auto rows = rows_with_label(data, minority_label);
  std::vector<std::vector<std::size_t>> neighbors(rows.size());
  std::vector<std::pair<double, std::size_t>> candidates;
  for (std::size_t a = 0; a < rows.size(); ++a) {
    candidates.clear();
    for (std::size_t b = 0; b < rows.size(); ++b) {
      if (a == b) continue;
      candidates.emplace_back(squared_distance(data.row(rows[a]), data.row(rows[b])), b);
    }
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take),
                      candidates.end());
    for (std::size_t j = 0; j < take; ++j) neighbors[a].push_back(candidates[j].second);
  }
  return neighbors;
}

Dataset smote(const Dataset& train, int k, Rng& rng) {
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "SMOTE needs k >= 1");
  const std::size_t n0 = train.count(0);
  const std::size_t n1 = train.count(1);
  if (n0 == n1) return train;

  const int minority = n1 < n0 ? 1 : 0;
  const std::size_t n_min = std::min(n0, n1);
  const std::size_t n_maj = std::max(n0, n1);
  if (n_min <= static_cast<std::size_t>(k)) {
    throw Error(ErrorKind::InsufficientMinority,
                "minority class has " + std::to_string(n_min) + " rows; SMOTE with k=" +
                    std::to_string(k) + " needs at least " + std::to_string(k + 1));
  }

  const auto rows = rows_with_label(train, minority);
  const auto neighbors = minority_neighbors(train, minority, k);

  Dataset out = train;
  std::vector<double> synthetic(train.n_features());
  for (std::size_t s = 0; s < n_maj - n_min; ++s) {
    const std::size_t base = rng.index(rows.size());
    const std::size_t nn = neighbors[base][rng.index(neighbors[base].size())];
    const double u = rng.uniform();
    const auto x = train.row(rows[base]);
    const auto y = train.row(rows[nn]);
    for (std::size_t f = 0; f < synthetic.size(); ++f) synthetic[f] = x[f] + u * (y[f] - x[f]);
    out.add(synthetic, minority, train.group(rows[base]));
  }
  return out;
}

}  // namespace gaze_sentinel::learners
