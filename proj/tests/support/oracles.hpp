#pragma once

// Independent reference computations used by unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "gaze_sentinel/core.hpp"
#include "gaze_sentinel/dataset.hpp"
#include "gaze_sentinel/rng.hpp"

namespace oracle {

struct Entropies {
  double stationary = 0.0;
  double transition = 0.0;
};

// Direct evaluation over a label sequence with map-based counts and natural
// logs converted to bits.
inline Entropies entropies(std::span<const int> seq) {
  Entropies e;
  if (seq.empty()) return e;
  std::map<int, double> visits;
  std::map<int, double> outgoing;
  std::map<std::pair<int, int>, double> pairs;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    visits[seq[i]] += 1.0;
    if (i + 1 < seq.size()) {
      outgoing[seq[i]] += 1.0;
      pairs[{seq[i], seq[i + 1]}] += 1.0;
    }
  }
  const double n = static_cast<double>(seq.size());
  for (const auto& [label, count] : visits) e.stationary -= (count / n) * std::log(count / n) / std::log(2.0);
  for (const auto& [key, count] : pairs) {
    const double pi = visits[key.first] / n;
    const double p = count / outgoing[key.first];
    e.transition -= pi * p * std::log(p) / std::log(2.0);
  }
  return e;
}

inline std::vector<gaze_sentinel::FixationEvent> fixations_from(std::span<const int> seq, double dwell = 0.25) {
  std::vector<gaze_sentinel::FixationEvent> out;
  double t = 0.0;
  for (int label : seq) {
    out.push_back({gaze_sentinel::kAllAois[label], t, dwell});
    t += dwell;
  }
  return out;
}

inline double sq_dist(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return d;
}

// True when `s` lies on the segment from `a` to `b` (within `tol`).
inline bool on_segment(std::span<const double> s, std::span<const double> a, std::span<const double> b,
                       double tol = 1e-9) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (s[i] - a[i]) * (b[i] - a[i]);
    den += (b[i] - a[i]) * (b[i] - a[i]);
  }
  const double lambda = den > 0.0 ? num / den : 0.0;
  if (lambda < -tol || lambda > 1.0 + tol) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i] + lambda * (b[i] - a[i]) - s[i]) > tol * (1.0 + std::abs(s[i]))) return false;
  }
  return true;
}

// Indices of the same-class points within the k-th smallest distance of
// point i (ties at the boundary included), recomputed exhaustively.
inline std::vector<std::size_t> near_neighbors(const gaze_sentinel::learners::Dataset& data, std::size_t i,
                                               int label, int k) {
  std::vector<std::pair<double, std::size_t>> d;
  for (std::size_t j = 0; j < data.size(); ++j) {
    if (j != i && data.label(j) == label) d.emplace_back(sq_dist(data.row(i), data.row(j)), j);
  }
  std::sort(d.begin(), d.end());
  std::vector<std::size_t> out;
  if (d.empty()) return out;
  const double cutoff = d[std::min<std::size_t>(k, d.size()) - 1].first;
  for (const auto& [dist, j] : d) {
    if (dist <= cutoff) out.push_back(j);
  }
  return out;
}

// Verifies a SMOTE output against its input: originals first and unchanged,
// balanced counts, every synthetic row between a minority point and one of
// its k nearest minority neighbors.
inline bool smote_valid(const gaze_sentinel::learners::Dataset& in, const gaze_sentinel::learners::Dataset& out,
                        int k) {
  if (out.size() < in.size()) return false;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const auto a = in.row(i);
    const auto b = out.row(i);
    if (!std::equal(a.begin(), a.end(), b.begin()) || in.label(i) != out.label(i) || in.group(i) != out.group(i)) {
      return false;
    }
  }
  if (out.count(0) != out.count(1)) return false;
  const int minority = in.count(1) < in.count(0) ? 1 : 0;
  std::vector<std::vector<std::size_t>> neighbors(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in.label(i) == minority) neighbors[i] = near_neighbors(in, i, minority, k);
  }
  for (std::size_t s = in.size(); s < out.size(); ++s) {
    if (out.label(s) != minority) return false;
    bool found = false;
    for (std::size_t i = 0; i < in.size() && !found; ++i) {
      if (in.label(i) != minority) continue;
      for (std::size_t j : neighbors[i]) {
        if (on_segment(out.row(s), in.row(i), in.row(j))) {
          found = true;
          break;
        }
      }
    }
    if (!found) return false;
  }
  return true;
}

inline double accuracy(std::span<const int> truth, std::span<const int> pred) {
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += truth[i] == pred[i];
  return truth.empty() ? 0.0 : static_cast<double>(hit) / truth.size();
}

// Two well separated Gaussian blobs in 2-D, `n` points per class.
inline gaze_sentinel::learners::Dataset separable_blobs(std::size_t n, std::uint64_t seed) {
  gaze_sentinel::Rng rng(seed);
  gaze_sentinel::learners::Dataset d(2);
  for (std::size_t i = 0; i < 2 * n; ++i) {
    const int y = i < n ? 0 : 1;
    const double cx = y ? 4.0 : -4.0;
    const double row[2] = {cx + rng.normal(), rng.normal()};
    d.add(row, y, static_cast<int>(i));
  }
  return d;
}

// XOR of the coordinate signs with a margin around the axes. Points come in
// (x, y), (-x, -y) pairs, so the sample is point-symmetric like the ideal
// problem and no halfplane can exploit a sampling imbalance between quadrants.
inline gaze_sentinel::learners::Dataset xor_set(std::size_t n, std::uint64_t seed) {
  gaze_sentinel::Rng rng(seed);
  gaze_sentinel::learners::Dataset d(2);
  for (std::size_t i = 0; i < n / 2; ++i) {
    double x = rng.uniform(-1.0, 1.0);
    double y = rng.uniform(-1.0, 1.0);
    x += x < 0 ? -0.1 : 0.1;
    y += y < 0 ? -0.1 : 0.1;
    const int label = (x > 0) != (y > 0) ? 1 : 0;
    const double a[2] = {x, y};
    const double b[2] = {-x, -y};
    d.add(a, label, static_cast<int>(2 * i));
    d.add(b, label, static_cast<int>(2 * i + 1));
  }
  return d;
}

}  // namespace oracle
