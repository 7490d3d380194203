#include <iostream>
#include <string>
#include <vector>

#include "gaze_sentinel/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return gaze_sentinel::cli::run(args, std::cout, std::cerr);
}
