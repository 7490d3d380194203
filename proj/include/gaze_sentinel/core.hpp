#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace gaze_sentinel {

enum class AoiLabel : int {
  RobotBody = 0,
  EndEffector,
  RobotPieces,
  ParticipantPieces,
  PuzzleBoard,
  Elsewhere,
};

inline constexpr std::size_t kAoiCount = 6;

inline constexpr std::array<AoiLabel, kAoiCount> kAllAois = {
    AoiLabel::RobotBody,         AoiLabel::EndEffector, AoiLabel::RobotPieces,
    AoiLabel::ParticipantPieces, AoiLabel::PuzzleBoard, AoiLabel::Elsewhere,
};

constexpr std::size_t index_of(AoiLabel label) { return static_cast<std::size_t>(label); }

std::string_view to_string(AoiLabel label);
std::optional<AoiLabel> parse_aoi(std::string_view name);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

// Axis-aligned rectangle in scene millimeters; closed on the low edges, open
// on the high edges.
struct Rect {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  bool contains(Point2 p) const { return p.x >= x0 && p.x < x1 && p.y >= y0 && p.y < y1; }
  Point2 center() const { return {0.5 * (x0 + x1), 0.5 * (y0 + y1)}; }
};

struct GazeSample {
  double t = 0.0;
  Point2 point;
  bool valid = true;
};

class AoiLayout {
 public:
  using Entry = std::pair<AoiLabel, Rect>;

  AoiLayout() = default;
  // Throws InvalidArgument on an Elsewhere entry, a duplicate label, or an
  // empty rectangle.
  explicit AoiLayout(std::vector<Entry> entries);

  const std::vector<Entry>& entries() const { return entries_; }
  const Rect* rect_for(AoiLabel label) const;

 private:
  std::vector<Entry> entries_;
};

struct FixationEvent {
  AoiLabel aoi = AoiLabel::Elsewhere;
  double start = 0.0;
  double duration = 0.0;

  double end() const { return start + duration; }
};

enum class SegmentLabel : int { NF = 0, EF = 1, DF = 2 };
enum class FailureType : int { EF = 1, DF = 2 };

std::string_view to_string(SegmentLabel label);
std::optional<SegmentLabel> parse_segment_label(std::string_view name);

inline constexpr double kEfDuration = 15.0;
inline constexpr double kDfDuration = 16.5;

constexpr double failure_duration(FailureType type) {
  return type == FailureType::EF ? kEfDuration : kDfDuration;
}

struct EpisodeSegment {
  int participant_id = 0;
  int puzzle_id = 0;
  int piece_index = 0;
  SegmentLabel label = SegmentLabel::NF;
  double t_start = 0.0;
  double t_end = 0.0;

  double duration() const { return t_end - t_start; }
};

enum class TimelineEventKind : int { PickupStart, PlacementDone, FailureStart, FailureEnd };

std::string_view to_string(TimelineEventKind kind);
std::optional<TimelineEventKind> parse_timeline_kind(std::string_view name);

struct TimelineEvent {
  double t = 0.0;
  int piece = 0;
  TimelineEventKind kind = TimelineEventKind::PickupStart;
};

struct FailureAnnotation {
  int piece = 0;
  FailureType type = FailureType::EF;
};

struct Session {
  int participant_id = 0;
  int puzzle_id = 0;
  double duration = 0.0;  // seconds; windows are laid out over [0, duration]
  AoiLayout layout;
  std::vector<TimelineEvent> timeline;
  std::optional<FailureAnnotation> failure;
  std::vector<GazeSample> gaze;
};

AoiLabel hit_test(Point2 point, const AoiLayout& layout);

struct DebounceOptions {
  double min_dwell = 0.1;
  // Invalid stretches shorter than this do not break a run.
  double max_invalid_gap = 0.05;
};

// Median spacing of consecutive timestamps; 0 for fewer than two samples.
double nominal_period(std::span<const GazeSample> stream);

// Throws MalformedStream if timestamps are not strictly increasing.
std::vector<FixationEvent> debounce(std::span<const GazeSample> stream, const AoiLayout& layout,
                                    const DebounceOptions& options = {});

// One segment per robot piece, ordered by piece index. Throws
// MalformedTimeline when a piece lacks its events or an annotated failure has
// no failure-start.
std::vector<EpisodeSegment> segment_session(const Session& session);

// Samples with t0 <= t < t1 (binary search on the ordered stream).
std::span<const GazeSample> slice_samples(std::span<const GazeSample> stream, double t0, double t1);

}  // namespace gaze_sentinel
