#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include "gaze_sentinel/error.hpp"

int main(int argc, char** argv) {
  gaze_sentinel::set_warning_sink([](std::string_view) {});
  doctest::Context context(argc, argv);
  return context.run();
}
