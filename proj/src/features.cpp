#include "gaze_sentinel/features.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "gaze_sentinel/error.hpp"

namespace gaze_sentinel {

namespace {

double plogp_bits(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

}  // namespace

std::array<double, kFeatureCount> FeatureVector::to_array() const {
  return {shift_rate_all, shift_rate_robot_body, mean_ee_dwell, p_aoi[0], p_aoi[1], p_aoi[2],
          p_aoi[3],       p_aoi[4],              p_aoi[5],      transition_entropy, stationary_entropy};
}

FeatureVector FeatureVector::from_array(std::span<const double, kFeatureCount> v) {
  FeatureVector f;
  f.shift_rate_all = v[0];
  f.shift_rate_robot_body = v[1];
  f.mean_ee_dwell = v[2];
  std::copy(v.begin() + 3, v.begin() + 9, f.p_aoi.begin());
  f.transition_entropy = v[9];
  f.stationary_entropy = v[10];
  return f;
}

const std::array<std::string_view, kFeatureCount>& feature_names() {
  static const std::array<std::string_view, kFeatureCount> names = {
      "shift_rate_all",         "shift_rate_robot_body", "mean_ee_dwell",
      "p_robot_body",           "p_end_effector",        "p_robot_pieces",
      "p_participant_pieces",   "p_puzzle_board",        "p_elsewhere",
      "transition_entropy",     "stationary_entropy",
  };
  return names;
}

TransitionModel build_transition_model(std::span<const FixationEvent> fixations) {
  TransitionModel model;
  if (fixations.empty()) return model;
  std::array<int, kAoiCount> visits{};
  for (std::size_t i = 0; i < fixations.size(); ++i) {
    ++visits[index_of(fixations[i].aoi)];
    if (i > 0) ++model.counts[index_of(fixations[i - 1].aoi)][index_of(fixations[i].aoi)];
  }
  const double total = static_cast<double>(fixations.size());
  for (std::size_t l = 0; l < kAoiCount; ++l) model.visit_dist[l] = visits[l] / total;
  return model;
}

double stationary_entropy(std::span<const double, kAoiCount> visit_dist) {
  double h = 0.0;
  for (double p : visit_dist) h -= plogp_bits(p);
  return h;
}

double transition_entropy(const TransitionModel& model) {
  double h = 0.0;
  for (std::size_t i = 0; i < kAoiCount; ++i) {
    int row_sum = 0;
    for (int c : model.counts[i]) row_sum += c;
    if (row_sum == 0 || model.visit_dist[i] == 0.0) continue;
    double row_h = 0.0;
    for (int c : model.counts[i]) row_h -= plogp_bits(static_cast<double>(c) / row_sum);
    h += model.visit_dist[i] * row_h;
  }
  return h;
}

FeatureVector extract_features(std::span<const FixationEvent> fixations, double t0, double t1) {
  if (!(t1 > t0)) throw Error(ErrorKind::InvalidSlice, "feature slice must satisfy t1 > t0");

  std::vector<FixationEvent> clipped;
  for (const auto& f : fixations) {
    const double a = std::max(f.start, t0);
    const double b = std::min(f.end(), t1);
    if (b > a) clipped.push_back({f.aoi, a, b - a});
  }

  const double span = t1 - t0;
  FeatureVector out;
  if (!clipped.empty()) {
    out.shift_rate_all = static_cast<double>(clipped.size() - 1) / span;
  }

  std::array<double, kAoiCount> dwell{};
  int robot_body_entries = 0;
  int ee_visits = 0;
  for (std::size_t i = 0; i < clipped.size(); ++i) {
    const auto& f = clipped[i];
    dwell[index_of(f.aoi)] += f.duration;
    if (f.aoi == AoiLabel::RobotBody && i > 0) ++robot_body_entries;
    if (f.aoi == AoiLabel::EndEffector) ++ee_visits;
  }
  out.shift_rate_robot_body = robot_body_entries / span;
  out.mean_ee_dwell = ee_visits > 0 ? dwell[index_of(AoiLabel::EndEffector)] / ee_visits : 0.0;

  double on_aoi = 0.0;
  for (std::size_t l = 0; l < kAoiCount; ++l) {
    if (kAllAois[l] == AoiLabel::Elsewhere) continue;
    out.p_aoi[l] = std::clamp(dwell[l] / span, 0.0, 1.0);
    on_aoi += out.p_aoi[l];
  }
  out.p_aoi[index_of(AoiLabel::Elsewhere)] = std::max(0.0, 1.0 - on_aoi);

  const auto model = build_transition_model(clipped);
  out.transition_entropy = transition_entropy(model);
  out.stationary_entropy = stationary_entropy(model.visit_dist);
  return out;
}

FeatureVector featurize_slice(const Session& session, double t0, double t1,
                              const DebounceOptions& options) {
  if (!(t1 > t0)) throw Error(ErrorKind::InvalidSlice, "feature slice must satisfy t1 > t0");
  const auto samples = slice_samples(session.gaze, t0, t1);
  const auto fixations = debounce(samples, session.layout, options);
  return extract_features(fixations, t0, t1);
}

}  // namespace gaze_sentinel
