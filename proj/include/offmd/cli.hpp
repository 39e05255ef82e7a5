#ifndef OFFMD_CLI_HPP
#define OFFMD_CLI_HPP

#include <string>
#include <vector>

namespace offmd {

// Full command-line entry point (everything after argv[0]).  Returns the
// process exit code: 0 success, 2 configuration error, 3 protocol desync or
// transport failure, 4 numerical blow-up.
int cli_main(const std::vector<std::string>& args);

}  // namespace offmd

#endif
