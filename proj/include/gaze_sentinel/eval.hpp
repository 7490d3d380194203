#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gaze_sentinel/classifiers.hpp"
#include "gaze_sentinel/core.hpp"
#include "gaze_sentinel/dataset.hpp"
#include "gaze_sentinel/features.hpp"

namespace gaze_sentinel::eval {

enum class Task { NfVsEf, NfVsDf };

std::string_view to_string(Task task);  // nf-ef, nf-df
std::optional<Task> parse_task(std::string_view name);
FailureType failure_type(Task task);
SegmentLabel failure_label(Task task);

struct Metrics {
  double accuracy = 0.0;
  std::optional<double> recall;  // empty when the input has no failure rows
  std::size_t total = 0;
  std::size_t failures = 0;
  std::size_t true_positives = 0;
};

// Throws InvalidArgument on empty or unequal-length input.
Metrics metrics(std::span<const int> y_true, std::span<const int> y_pred);

enum class Regime { FullSegment, FirstN, Window };
std::string_view to_string(Regime regime);

struct FoldResult {
  int participant = 0;
  Metrics metrics;
};

struct EvalReport {
  Task task = Task::NfVsEf;
  Regime regime = Regime::FullSegment;
  double regime_value = 0.0;  // n seconds or window width; 0 for full segments
  learners::ClassifierKind classifier = learners::ClassifierKind::Forest;
  std::vector<FoldResult> folds;
  Metrics aggregate;  // pooled over every fold's predictions
};

// One featurized segment of a corpus.
struct SegmentRecord {
  EpisodeSegment segment;
  FeatureVector features;
  std::size_t session = 0;  // index into the session list it came from
};

// Segments every session and featurizes each segment from its own samples.
std::vector<SegmentRecord> featurize_corpus(std::span<const Session> sessions,
                                            const DebounceOptions& options = {});

// NF rows plus the task's failure rows, label 1 for failure, grouped by
// participant. Row i corresponds to the i-th entry of `row_sources` if given.
learners::Dataset task_dataset(std::span<const SegmentRecord> records, Task task,
                               std::vector<std::size_t>* row_sources = nullptr);

// Fold models keyed by held-out participant: each is trained (after SMOTE with
// k = 2) on every other participant's rows. Every fold uses the same seed,
// derived from the config seed.
std::map<int, learners::TrainedModel> fit_fold_models(const learners::Dataset& data,
                                                      const learners::ClassifierConfig& config);

// Participant-level leave-one-out on full segments; `task` only tags the
// report. Participants listed in `participants` with no rows are skipped with
// a warning. Throws InvalidArgument with fewer than two participants.
EvalReport loo_cv(const learners::Dataset& data, const learners::ClassifierConfig& config,
                  Task task = Task::NfVsEf, std::span<const int> participants = {});

// [t_start, min(t_start + n, t_end)] for failure segments; NF segments pass
// through. Throws InvalidArgument when n <= 0.
EpisodeSegment truncate_segment(const EpisodeSegment& segment, double n);

// For each n, fold models trained on full segments score the held-out rows
// with failure rows re-featurized from their first n seconds.
std::vector<EvalReport> eval_first_n(std::span<const Session> sessions,
                                     std::span<const SegmentRecord> records, Task task,
                                     const learners::ClassifierConfig& config,
                                     std::span<const double> n_values,
                                     const DebounceOptions& options = {});

// Default n sweeps: 1..15 for EF, 1..16 plus 16.5 for DF.
std::vector<double> default_n_values(Task task);

struct Window {
  double t0 = 0.0;
  double t1 = 0.0;
  int truth = 0;  // 1 when at least half the window lies in the failure period
};

// Windows [k*slide, k*slide + width] for k = 0..floor((T - width) / slide).
std::vector<Window> sliding_windows(const Session& session, double width, double slide = 1.0);

struct DetectionEvent {
  int participant = 0;
  int puzzle = 0;
  double t0 = 0.0;
  double t1 = 0.0;
  int label = 0;
  double score = 0.0;
  int truth = 0;
};

// Classifies every sliding window in time order. Each window is featurized
// from the samples inside it only.
std::vector<DetectionEvent> stream_detect(const learners::TrainedModel& model, const Session& session,
                                          double width, double slide = 1.0,
                                          const DebounceOptions& options = {});

// Window features for a set of sessions, computed once and reused across
// classifiers.
struct SessionWindows {
  std::size_t session = 0;
  std::vector<Window> windows;
  std::vector<FeatureVector> features;
};

std::vector<SessionWindows> featurize_windows(std::span<const Session> sessions,
                                              std::span<const std::size_t> which, double width,
                                              double slide = 1.0,
                                              const DebounceOptions& options = {});

struct StreamResult {
  EvalReport report;
  std::vector<DetectionEvent> detections;
};

// Sliding-window evaluation: fold models trained on full segments classify
// the windows of the held-out participant's sessions whose failure matches
// the task.
StreamResult eval_stream(std::span<const Session> sessions, std::span<const SegmentRecord> records,
                         Task task, const learners::ClassifierConfig& config, double width,
                         double slide = 1.0, const DebounceOptions& options = {});

// Same, with precomputed window features for the task's sessions.
StreamResult eval_stream(std::span<const Session> sessions, std::span<const SegmentRecord> records,
                         std::span<const SessionWindows> windows, Task task,
                         const learners::ClassifierConfig& config, double width);

// Sessions whose failure type matches the task.
std::vector<std::size_t> task_sessions(std::span<const Session> sessions, Task task);

struct OffsetRate {
  int offset = 0;
  double fraction = 0.0;  // detected participants / participants
};

// For each integer offset o in [0, failure duration - width], the fraction of
// participants with a positive window starting within half a slide of
// failure_start + o in any of their sessions of the task's failure type.
std::vector<OffsetRate> interval_detection_rate(std::span<const DetectionEvent> detections,
                                                std::span<const Session> sessions, Task task,
                                                double width);

}  // namespace gaze_sentinel::eval
