#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>

#include "gaze_sentinel/core.hpp"

namespace gaze_sentinel {

inline constexpr int kFeatureSchemaVersion = 1;
inline constexpr std::size_t kFeatureCount = 11;

// Gaze metrics for one time slice. Component order is the persisted order.
struct FeatureVector {
  double shift_rate_all = 0.0;         // fixation boundaries per second
  double shift_rate_robot_body = 0.0;  // entries into RobotBody per second
  double mean_ee_dwell = 0.0;          // seconds per EndEffector visit
  std::array<double, kAoiCount> p_aoi{};
  double transition_entropy = 0.0;  // bits
  double stationary_entropy = 0.0;  // bits

  std::array<double, kFeatureCount> to_array() const;
  static FeatureVector from_array(std::span<const double, kFeatureCount> values);

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

// Column names in persisted order.
const std::array<std::string_view, kFeatureCount>& feature_names();

struct TransitionModel {
  std::array<std::array<int, kAoiCount>, kAoiCount> counts{};
  std::array<double, kAoiCount> visit_dist{};  // all zero when there are no fixations
};

TransitionModel build_transition_model(std::span<const FixationEvent> fixations);

double stationary_entropy(std::span<const double, kAoiCount> visit_dist);
double transition_entropy(const TransitionModel& model);

// Fixations are clipped to [t0, t1]. Throws InvalidSlice when t1 <= t0.
FeatureVector extract_features(std::span<const FixationEvent> fixations, double t0, double t1);

// Debounces only the samples inside [t0, t1) and extracts features over that
// slice; the result never depends on samples outside the slice.
FeatureVector featurize_slice(const Session& session, double t0, double t1,
                              const DebounceOptions& options = {});

}  // namespace gaze_sentinel
