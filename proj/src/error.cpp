#include "gaze_sentinel/error.hpp"

#include <atomic>
#include <iostream>

namespace gaze_sentinel {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::MalformedStream: return "malformed-stream";
    case ErrorKind::MalformedTimeline: return "malformed-timeline";
    case ErrorKind::InvalidSlice: return "invalid-slice";
    case ErrorKind::InsufficientMinority: return "insufficient-minority";
    case ErrorKind::DegenerateData: return "degenerate-data";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Io: return "io";
    case ErrorKind::Corrupt: return "corrupt";
    case ErrorKind::SchemaVersion: return "schema-version";
    case ErrorKind::Usage: return "usage";
  }
  return "unknown";
}

namespace {

void stderr_sink(std::string_view message) { std::cerr << "warning: " << message << '\n'; }

std::atomic<WarningSink> g_sink{&stderr_sink};

}  // namespace

void set_warning_sink(WarningSink sink) { g_sink.store(sink ? sink : &stderr_sink); }

void warn(std::string_view message) { g_sink.load()(message); }

}  // namespace gaze_sentinel
