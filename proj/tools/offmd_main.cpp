#include <string>
#include <vector>

#include "offmd/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return offmd::cli_main(args);
}
