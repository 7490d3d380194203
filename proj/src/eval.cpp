#include "gaze_sentinel/eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "gaze_sentinel/error.hpp"
#include "gaze_sentinel/rng.hpp"
#include "gaze_sentinel/smote.hpp"

namespace gaze_sentinel::eval {

namespace {

constexpr double kEps = 1e-9;

std::optional<EpisodeSegment> failure_segment(const Session& session) {
  if (!session.failure) return std::nullopt;
  for (const auto& seg : segment_session(session)) {
    if (seg.label != SegmentLabel::NF) return seg;
  }
  return std::nullopt;
}

struct Pooled {
  std::vector<int> truth;
  std::vector<int> predicted;
};

EvalReport assemble(Task task, Regime regime, double value, learners::ClassifierKind kind,
                    const std::map<int, Pooled>& per_fold) {
  EvalReport report;
  report.task = task;
  report.regime = regime;
  report.regime_value = value;
  report.classifier = kind;
  Pooled all;
  for (const auto& [participant, pooled] : per_fold) {
    if (pooled.truth.empty()) continue;
    report.folds.push_back({participant, metrics(pooled.truth, pooled.predicted)});
    all.truth.insert(all.truth.end(), pooled.truth.begin(), pooled.truth.end());
    all.predicted.insert(all.predicted.end(), pooled.predicted.begin(), pooled.predicted.end());
  }
  if (all.truth.empty()) throw Error(ErrorKind::InvalidArgument, "evaluation produced no predictions");
  report.aggregate = metrics(all.truth, all.predicted);
  return report;
}

}  // namespace

std::string_view to_string(Task task) { return task == Task::NfVsEf ? "nf-ef" : "nf-df"; }

std::optional<Task> parse_task(std::string_view name) {
  if (name == "nf-ef") return Task::NfVsEf;
  if (name == "nf-df") return Task::NfVsDf;
  return std::nullopt;
}

FailureType failure_type(Task task) { return task == Task::NfVsEf ? FailureType::EF : FailureType::DF; }

SegmentLabel failure_label(Task task) { return task == Task::NfVsEf ? SegmentLabel::EF : SegmentLabel::DF; }

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::FullSegment: return "full-segment";
    case Regime::FirstN: return "first-n";
    case Regime::Window: return "window";
  }
  return "?";
}

Metrics metrics(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.empty() || y_true.size() != y_pred.size()) {
    throw Error(ErrorKind::InvalidArgument, "metrics need equal-length, non-empty label vectors");
  }
  Metrics m;
  m.total = y_true.size();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    correct += y_true[i] == y_pred[i];
    if (y_true[i] == 1) {
      ++m.failures;
      m.true_positives += y_pred[i] == 1;
    }
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(m.total);
  if (m.failures > 0) {
    m.recall = static_cast<double>(m.true_positives) / static_cast<double>(m.failures);
  }
  return m;
}

std::vector<SegmentRecord> featurize_corpus(std::span<const Session> sessions,
                                            const DebounceOptions& options) {
  std::vector<SegmentRecord> records;
  for (std::size_t s = 0; s < sessions.size(); ++s) {
    for (const auto& seg : segment_session(sessions[s])) {
      records.push_back({seg, featurize_slice(sessions[s], seg.t_start, seg.t_end, options), s});
    }
  }
  return records;
}

learners::Dataset task_dataset(std::span<const SegmentRecord> records, Task task,
                               std::vector<std::size_t>* row_sources) {
  learners::Dataset data(kFeatureCount);
  const SegmentLabel positive = failure_label(task);
  if (row_sources) row_sources->clear();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.segment.label != SegmentLabel::NF && r.segment.label != positive) continue;
    data.add(r.features.to_array(), r.segment.label == positive ? 1 : 0, r.segment.participant_id);
    if (row_sources) row_sources->push_back(i);
  }
  return data;
}

std::map<int, learners::TrainedModel> fit_fold_models(const learners::Dataset& data,
                                                      const learners::ClassifierConfig& config) {
  const std::set<int> participants(data.groups().begin(), data.groups().end());
  if (participants.size() < 2) {
    throw Error(ErrorKind::InvalidArgument, "leave-one-out needs at least two participants");
  }
  std::map<int, learners::TrainedModel> models;
  for (int held_out : participants) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data.group(i) != held_out) rows.push_back(i);
    }
    // Same seed for every fold: participants with identical rows give identical folds.
    const auto fold_seed = derive_seed(config.seed, 0x666f6c64ULL);
    Rng smote_rng(derive_seed(fold_seed, 0x534d4f5445ULL));
    const auto balanced = learners::smote(data.subset(rows), learners::kSmoteNeighbors, smote_rng);
    auto fold_config = config;
    fold_config.seed = fold_seed;
    models.emplace(held_out, learners::train(fold_config, balanced));
  }
  return models;
}

EvalReport loo_cv(const learners::Dataset& data, const learners::ClassifierConfig& config,
                  Task task, std::span<const int> participants) {
  for (int p : participants) {
    if (std::find(data.groups().begin(), data.groups().end(), p) == data.groups().end()) {
      warn("participant " + std::to_string(p) + " has no rows; skipped");
    }
  }
  const auto models = fit_fold_models(data, config);
  std::map<int, Pooled> per_fold;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& model = models.at(data.group(i));
    auto& pooled = per_fold[data.group(i)];
    pooled.truth.push_back(data.label(i));
    pooled.predicted.push_back(model.predict(data.row(i)).label);
  }
  return assemble(task, Regime::FullSegment, 0.0, config.kind(), per_fold);
}

EpisodeSegment truncate_segment(const EpisodeSegment& segment, double n) {
  if (!(n > 0.0)) throw Error(ErrorKind::InvalidArgument, "truncation length must be positive");
  if (segment.label == SegmentLabel::NF) return segment;
  EpisodeSegment out = segment;
  out.t_end = std::min(segment.t_start + n, segment.t_end);
  return out;
}

std::vector<EvalReport> eval_first_n(std::span<const Session> sessions,
                                     std::span<const SegmentRecord> records, Task task,
                                     const learners::ClassifierConfig& config,
                                     std::span<const double> n_values,
                                     const DebounceOptions& options) {
  std::vector<std::size_t> sources;
  const auto data = task_dataset(records, task, &sources);
  const auto models = fit_fold_models(data, config);

  std::vector<EvalReport> reports;
  for (double n : n_values) {
    std::map<int, Pooled> per_fold;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto& record = records[sources[i]];
      const auto& model = models.at(data.group(i));
      learners::Prediction prediction;
      if (data.label(i) == 1) {
        const auto cut = truncate_segment(record.segment, n);
        const auto features =
            featurize_slice(sessions[record.session], cut.t_start, cut.t_end, options);
        prediction = model.predict(features.to_array());
      } else {
        prediction = model.predict(data.row(i));
      }
      auto& pooled = per_fold[data.group(i)];
      pooled.truth.push_back(data.label(i));
      pooled.predicted.push_back(prediction.label);
    }
    auto report = assemble(task, Regime::FirstN, n, config.kind(), per_fold);
    reports.push_back(std::move(report));
  }
  return reports;
}

std::vector<double> default_n_values(Task task) {
  std::vector<double> values;
  const int last = task == Task::NfVsEf ? 15 : 16;
  for (int n = 1; n <= last; ++n) values.push_back(n);
  if (task == Task::NfVsDf) values.push_back(kDfDuration);
  return values;
}

std::vector<Window> sliding_windows(const Session& session, double width, double slide) {
  if (!(width > 0.0) || !(slide > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "window width and slide must be positive");
  }
  std::vector<Window> windows;
  if (session.duration + kEps < width) {
    warn("session shorter than the window width; no windows");
    return windows;
  }
  const auto count = static_cast<std::size_t>(std::floor((session.duration - width) / slide + kEps)) + 1;
  const auto failure = failure_segment(session);
  windows.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Window w;
    w.t0 = static_cast<double>(k) * slide;
    w.t1 = w.t0 + width;
    if (failure) {
      const double overlap = std::min(w.t1, failure->t_end) - std::max(w.t0, failure->t_start);
      w.truth = overlap + kEps >= 0.5 * width ? 1 : 0;
    }
    windows.push_back(w);
  }
  return windows;
}

std::vector<DetectionEvent> stream_detect(const learners::TrainedModel& model, const Session& session,
                                          double width, double slide,
                                          const DebounceOptions& options) {
  std::vector<DetectionEvent> events;
  for (const auto& w : sliding_windows(session, width, slide)) {
    const auto features = featurize_slice(session, w.t0, w.t1, options);
    const auto p = model.predict(features.to_array());
    events.push_back({session.participant_id, session.puzzle_id, w.t0, w.t1, p.label, p.score, w.truth});
  }
  return events;
}

std::vector<SessionWindows> featurize_windows(std::span<const Session> sessions,
                                              std::span<const std::size_t> which, double width,
                                              double slide, const DebounceOptions& options) {
  std::vector<SessionWindows> out;
  for (std::size_t s : which) {
    SessionWindows sw;
    sw.session = s;
    sw.windows = sliding_windows(sessions[s], width, slide);
    for (const auto& w : sw.windows) sw.features.push_back(featurize_slice(sessions[s], w.t0, w.t1, options));
    out.push_back(std::move(sw));
  }
  return out;
}

std::vector<std::size_t> task_sessions(std::span<const Session> sessions, Task task) {
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < sessions.size(); ++s) {
    if (sessions[s].failure && sessions[s].failure->type == failure_type(task)) out.push_back(s);
  }
  return out;
}

StreamResult eval_stream(std::span<const Session> sessions, std::span<const SegmentRecord> records,
                         Task task, const learners::ClassifierConfig& config, double width,
                         double slide, const DebounceOptions& options) {
  const auto which = task_sessions(sessions, task);
  const auto windows = featurize_windows(sessions, which, width, slide, options);
  return eval_stream(sessions, records, windows, task, config, width);
}

StreamResult eval_stream(std::span<const Session> sessions, std::span<const SegmentRecord> records,
                         std::span<const SessionWindows> windows, Task task,
                         const learners::ClassifierConfig& config, double width) {
  const auto data = task_dataset(records, task);
  const auto models = fit_fold_models(data, config);

  StreamResult result;
  std::map<int, Pooled> per_fold;
  for (const auto& sw : windows) {
    const auto& session = sessions[sw.session];
    const auto it = models.find(session.participant_id);
    if (it == models.end()) continue;
    auto& pooled = per_fold[session.participant_id];
    for (std::size_t k = 0; k < sw.windows.size(); ++k) {
      const auto& w = sw.windows[k];
      const auto p = it->second.predict(sw.features[k].to_array());
      result.detections.push_back(
          {session.participant_id, session.puzzle_id, w.t0, w.t1, p.label, p.score, w.truth});
      pooled.truth.push_back(w.truth);
      pooled.predicted.push_back(p.label);
    }
  }
  result.report = assemble(task, Regime::Window, width, config.kind(), per_fold);
  return result;
}

std::vector<OffsetRate> interval_detection_rate(std::span<const DetectionEvent> detections,
                                                std::span<const Session> sessions, Task task,
                                                double width) {
  const FailureType type = failure_type(task);
  const int last_offset = static_cast<int>(std::floor(failure_duration(type) - width + kEps));
  std::vector<OffsetRate> curve;
  if (last_offset < 0) return curve;

  // Failure starts per participant, keyed by puzzle.
  std::map<int, std::map<int, double>> starts;
  for (const auto& session : sessions) {
    if (!session.failure || session.failure->type != type) continue;
    if (const auto seg = failure_segment(session)) {
      starts[session.participant_id][session.puzzle_id] = seg->t_start;
    }
  }
  if (starts.empty()) return curve;

  for (int o = 0; o <= last_offset; ++o) {
    std::size_t detected = 0;
    for (const auto& [participant, by_puzzle] : starts) {
      const bool hit = std::any_of(detections.begin(), detections.end(), [&](const DetectionEvent& d) {
        if (d.participant != participant || d.label != 1) return false;
        const auto it = by_puzzle.find(d.puzzle);
        if (it == by_puzzle.end()) return false;
        const double target = it->second + o;
        return d.t0 >= target - 0.5 && d.t0 < target + 0.5;
      });
      detected += hit;
    }
    curve.push_back({o, static_cast<double>(detected) / static_cast<double>(starts.size())});
  }
  return curve;
}

}  // namespace gaze_sentinel::eval
