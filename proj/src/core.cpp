#include "gaze_sentinel/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gaze_sentinel/error.hpp"

namespace gaze_sentinel {

namespace {

constexpr std::array<std::string_view, kAoiCount> kAoiNames = {
    "robot_body", "end_effector", "robot_pieces", "participant_pieces", "puzzle_board", "elsewhere",
};

constexpr double kTimeEps = 1e-9;

}  // namespace

std::string_view to_string(AoiLabel label) { return kAoiNames[index_of(label)]; }

std::optional<AoiLabel> parse_aoi(std::string_view name) {
  for (std::size_t i = 0; i < kAoiCount; ++i) {
    if (kAoiNames[i] == name) return kAllAois[i];
  }
  return std::nullopt;
}

std::string_view to_string(SegmentLabel label) {
  switch (label) {
    case SegmentLabel::NF: return "NF";
    case SegmentLabel::EF: return "EF";
    case SegmentLabel::DF: return "DF";
  }
  return "?";
}

std::optional<SegmentLabel> parse_segment_label(std::string_view name) {
  if (name == "NF") return SegmentLabel::NF;
  if (name == "EF") return SegmentLabel::EF;
  if (name == "DF") return SegmentLabel::DF;
  return std::nullopt;
}

std::string_view to_string(TimelineEventKind kind) {
  switch (kind) {
    case TimelineEventKind::PickupStart: return "pickup_start";
    case TimelineEventKind::PlacementDone: return "placement_done";
    case TimelineEventKind::FailureStart: return "failure_start";
    case TimelineEventKind::FailureEnd: return "failure_end";
  }
  return "?";
}

std::optional<TimelineEventKind> parse_timeline_kind(std::string_view name) {
  for (auto kind : {TimelineEventKind::PickupStart, TimelineEventKind::PlacementDone,
                    TimelineEventKind::FailureStart, TimelineEventKind::FailureEnd}) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

AoiLayout::AoiLayout(std::vector<Entry> entries) : entries_(std::move(entries)) {
  std::array<bool, kAoiCount> seen{};
  for (const auto& [label, rect] : entries_) {
    if (label == AoiLabel::Elsewhere) {
      throw Error(ErrorKind::InvalidArgument, "AOI layout may not contain a rectangle for elsewhere");
    }
    if (seen[index_of(label)]) {
      throw Error(ErrorKind::InvalidArgument,
                  "duplicate AOI rectangle for " + std::string(to_string(label)));
    }
    if (!(rect.x0 < rect.x1 && rect.y0 < rect.y1)) {
      throw Error(ErrorKind::InvalidArgument,
                  "empty AOI rectangle for " + std::string(to_string(label)));
    }
    seen[index_of(label)] = true;
  }
}

const Rect* AoiLayout::rect_for(AoiLabel label) const {
  for (const auto& [l, rect] : entries_) {
    if (l == label) return &rect;
  }
  return nullptr;
}

AoiLabel hit_test(Point2 point, const AoiLayout& layout) {
  if (!std::isfinite(point.x) || !std::isfinite(point.y)) return AoiLabel::Elsewhere;
  for (const auto& [label, rect] : layout.entries()) {
    if (rect.contains(point)) return label;
  }
  return AoiLabel::Elsewhere;
}

double nominal_period(std::span<const GazeSample> stream) {
  if (stream.size() < 2) return 0.0;
  std::vector<double> gaps;
  gaps.reserve(stream.size() - 1);
  for (std::size_t i = 1; i < stream.size(); ++i) gaps.push_back(stream[i].t - stream[i - 1].t);
  auto mid = gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2);
  std::nth_element(gaps.begin(), mid, gaps.end());
  return *mid;
}

std::vector<FixationEvent> debounce(std::span<const GazeSample> stream, const AoiLayout& layout,
                                    const DebounceOptions& options) {
  if (!(options.min_dwell > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "min_dwell must be positive");
  }
  for (std::size_t i = 1; i < stream.size(); ++i) {
    if (!(stream[i].t > stream[i - 1].t)) {
      throw Error(ErrorKind::MalformedStream,
                  "gaze timestamps not strictly increasing at sample " + std::to_string(i));
    }
  }

  const double period = nominal_period(stream);

  struct Run {
    AoiLabel label;
    double start;
    double last;
  };
  std::vector<FixationEvent> kept;
  std::optional<Run> current;

  auto close_run = [&](const Run& run) {
    const double duration = run.last + period - run.start;
    if (duration + kTimeEps < options.min_dwell) return;
    if (!kept.empty() && kept.back().aoi == run.label) {
      kept.back().duration += duration;
    } else {
      kept.push_back({run.label, run.start, duration});
    }
  };

  for (const auto& sample : stream) {
    if (!sample.valid) continue;
    const AoiLabel label = hit_test(sample.point, layout);
    if (current && current->label == label &&
        sample.t - current->last - period < options.max_invalid_gap - kTimeEps) {
      current->last = sample.t;
      continue;
    }
    if (current) close_run(*current);
    current = Run{label, sample.t, sample.t};
  }
  if (current) close_run(*current);
  return kept;
}

std::vector<EpisodeSegment> segment_session(const Session& session) {
  const auto& timeline = session.timeline;
  for (std::size_t i = 1; i < timeline.size(); ++i) {
    if (!(timeline[i].t > timeline[i - 1].t)) {
      throw Error(ErrorKind::MalformedTimeline, "timeline events not strictly ordered");
    }
  }

  auto find_event = [&](int piece, TimelineEventKind kind) -> std::optional<double> {
    for (const auto& ev : timeline) {
      if (ev.piece == piece && ev.kind == kind) return ev.t;
    }
    return std::nullopt;
  };

  int max_piece = 0;
  for (const auto& ev : timeline) {
    if (ev.piece < 1) throw Error(ErrorKind::MalformedTimeline, "timeline piece index below 1");
    max_piece = std::max(max_piece, ev.piece);
  }

  std::vector<EpisodeSegment> segments;
  for (int piece = 1; piece <= max_piece; ++piece) {
    EpisodeSegment seg;
    seg.participant_id = session.participant_id;
    seg.puzzle_id = session.puzzle_id;
    seg.piece_index = piece;

    if (session.failure && session.failure->piece == piece) {
      const auto start = find_event(piece, TimelineEventKind::FailureStart);
      if (!start) {
        throw Error(ErrorKind::MalformedTimeline,
                    "annotated failure on piece " + std::to_string(piece) + " has no failure_start");
      }
      seg.label = session.failure->type == FailureType::EF ? SegmentLabel::EF : SegmentLabel::DF;
      seg.t_start = *start;
      seg.t_end = *start + failure_duration(session.failure->type);
    } else {
      const auto pickup = find_event(piece, TimelineEventKind::PickupStart);
      const auto placed = find_event(piece, TimelineEventKind::PlacementDone);
      if (!pickup || !placed || !(*placed > *pickup)) {
        throw Error(ErrorKind::MalformedTimeline,
                    "piece " + std::to_string(piece) + " lacks an ordered pickup/placement pair");
      }
      seg.label = SegmentLabel::NF;
      seg.t_start = *pickup;
      seg.t_end = *placed;
    }
    segments.push_back(seg);
  }
  if (session.failure && (session.failure->piece < 1 || session.failure->piece > max_piece)) {
    throw Error(ErrorKind::MalformedTimeline, "failure annotated on a piece with no events");
  }
  return segments;
}

std::span<const GazeSample> slice_samples(std::span<const GazeSample> stream, double t0, double t1) {
  auto by_time = [](const GazeSample& s, double t) { return s.t < t; };
  auto first = std::lower_bound(stream.begin(), stream.end(), t0, by_time);
  auto last = std::lower_bound(first, stream.end(), t1, by_time);
  return {first, last};
}

}  // namespace gaze_sentinel
