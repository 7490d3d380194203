#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gaze_sentinel/classifiers.hpp"
#include "gaze_sentinel/core.hpp"
#include "gaze_sentinel/eval.hpp"

namespace gaze_sentinel::io {

inline constexpr int kSessionSchemaVersion = 1;

// Shortest text that parses back to the same double.
std::string format_double(double v);

// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
// Throws Io with the path when the file cannot be read.
std::string read_file(const std::filesystem::path& path);

// Session JSON Lines: one header record, then one {t, x, y, valid} record per
// sample.
std::string session_to_jsonl(const Session& session, std::string_view provenance = {});
// Throws Corrupt (with `source` in the message) on malformed input and
// SchemaVersion on an unknown header version.
Session session_from_jsonl(std::istream& in, std::string_view source = "<stream>");
void save_session(const std::filesystem::path& path, const Session& session,
                  std::string_view provenance = {});
Session load_session(const std::filesystem::path& path);

// Feature table: optional '#' provenance line, then a header and one row per
// segment with participant,puzzle,piece,label,t0,t1 and the feature columns.
std::string feature_table_csv(std::span<const eval::SegmentRecord> records,
                              std::string_view provenance = {});
// Rows come back with session index 0.
std::vector<eval::SegmentRecord> parse_feature_table(std::string_view text,
                                                     std::string_view source = "<text>");

// Model documents carry the schema version; version 1 documents (no
// fingerprint, arity given by the feature-name list) load with a warning.
std::string model_to_json(const learners::TrainedModel& model);
learners::TrainedModel model_from_json(std::string_view text, std::string_view source = "<text>");
void save_model(const std::filesystem::path& path, const learners::TrainedModel& model);
learners::TrainedModel load_model(const std::filesystem::path& path);

// task,classifier,n_or_width,fold,accuracy,recall with one row per fold plus an
// "all" row per report; undefined recall is written as NA.
std::string report_csv(std::span<const eval::EvalReport> reports, std::string_view provenance = {});

struct OffsetCurve {
  eval::Task task = eval::Task::NfVsEf;
  learners::ClassifierKind classifier = learners::ClassifierKind::Forest;
  double width = 5.0;
  std::vector<eval::OffsetRate> rates;
};

// task,classifier,width,offset_s,pct_detected (percent).
std::string offset_curve_csv(std::span<const OffsetCurve> curves, std::string_view provenance = {});

// Detection events as JSON Lines after a provenance header record.
std::string detections_jsonl(std::span<const eval::DetectionEvent> events, std::string_view provenance = {});

}  // namespace gaze_sentinel::io
