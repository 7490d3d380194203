#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gaze_sentinel {

enum class ErrorKind {
  InvalidArgument,
  MalformedStream,
  MalformedTimeline,
  InvalidSlice,
  InsufficientMinority,
  DegenerateData,
  Shape,
  Io,
  Corrupt,
  SchemaVersion,
  Usage,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Warnings go through a replaceable sink (stderr by default).
using WarningSink = void (*)(std::string_view);
void set_warning_sink(WarningSink sink);
void warn(std::string_view message);

}  // namespace gaze_sentinel
