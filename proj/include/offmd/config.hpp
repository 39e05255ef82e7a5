#ifndef OFFMD_CONFIG_HPP
#define OFFMD_CONFIG_HPP

#include <string>
#include <utility>
#include <vector>

#include "offmd/params.hpp"
#include "offmd/scheduler.hpp"

namespace offmd {

// Everything a run needs, addressable as flat key=value pairs.  The same
// mapping backs config files, command-line flags (--key value, flags win),
// and the provenance header written into every CSV — so any output file can
// be replayed into the run that produced it.
struct RunConfig {
  SimParams params;
  RunSetup setup;
  std::string out_dir = ".";  // flag/env only; not part of provenance
};

// Ordered provenance pairs (deterministic order, canonical formatting).
std::vector<std::pair<std::string, std::string>> config_kv(const RunConfig& cfg);

// Applies one key.  Throws ConfigError naming the key on unknown keys or
// unparsable values.
void config_apply(RunConfig& cfg, const std::string& key, const std::string& value);

// key=value per line; blank lines and lines starting with '#' are ignored.
void config_load_file(RunConfig& cfg, const std::string& path);

}  // namespace offmd

#endif
