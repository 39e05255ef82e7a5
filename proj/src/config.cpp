#include "offmd/config.hpp"

#include <cstdlib>
#include <fstream>

#include "offmd/snapshot.hpp"

namespace offmd {
namespace {

long long parse_int(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const long long v = std::strtoll(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0') {
    throw ConfigError("key '" + key + "': '" + value + "' is not an integer");
  }
  return v;
}

double parse_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0') {
    throw ConfigError("key '" + key + "': '" + value + "' is not a number");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError("key '" + key + "': '" + value + "' is not a boolean");
}

std::array<int, 3> parse_cells(const std::string& key, const std::string& value) {
  std::array<int, 3> out;
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) {
    const std::size_t next = i < 2 ? value.find(',', pos) : value.size();
    if (next == std::string::npos) {
      throw ConfigError("key '" + key + "': expected three comma-separated counts, got '" +
                        value + "'");
    }
    out[i] = static_cast<int>(parse_int(key, value.substr(pos, next - pos)));
    pos = next + 1;
  }
  return out;
}

std::string bool_str(bool v) { return v ? "true" : "false"; }

std::string cells_str(const std::array<int, 3>& c) {
  return std::to_string(c[0]) + "," + std::to_string(c[1]) + "," + std::to_string(c[2]);
}

}  // namespace

std::vector<std::pair<std::string, std::string>> config_kv(const RunConfig& cfg) {
  const SimParams& p = cfg.params;
  const RunSetup& s = cfg.setup;
  return {
      {"mode", to_string(s.mode)},
      {"cells", cells_str(p.unit_cells)},
      {"density", format_double(p.density)},
      {"t_init", format_double(p.t_init)},
      {"epsilon", format_double(p.epsilon)},
      {"sigma", format_double(p.sigma)},
      {"r_cut", format_double(p.r_cut)},
      {"skin", format_double(p.skin)},
      {"dt", format_double(p.dt)},
      {"reneigh_interval", std::to_string(p.reneigh_interval)},
      {"sort_interval", std::to_string(p.sort_interval)},
      {"n_iterations", std::to_string(p.n_iterations)},
      {"rng_seed", std::to_string(p.rng_seed)},
      {"min_separation", format_double(p.min_separation)},
      {"nodes", std::to_string(s.n_nodes)},
      {"host_threads", std::to_string(s.host_threads)},
      {"offload_threads", std::to_string(s.offload_threads)},
      {"offload_throttle", format_double(s.offload_throttle)},
      {"host_throttle", format_double(s.host_throttle)},
      {"sample_interval", std::to_string(s.sample_interval)},
      {"track_ids", bool_str(s.track_ids)},
      {"collect_digests", bool_str(s.collect_digests)},
      {"transport", s.socket_transport ? "socket" : "inproc"},
      {"timeout_s", format_double(s.timeout_s)},
  };
}

void config_apply(RunConfig& cfg, const std::string& key, const std::string& value) {
  SimParams& p = cfg.params;
  RunSetup& s = cfg.setup;
  if (key == "mode") {
    s.mode = run_mode_from_string(value);
  } else if (key == "cells") {
    p.unit_cells = parse_cells(key, value);
  } else if (key == "density") {
    p.density = parse_double(key, value);
  } else if (key == "t_init") {
    p.t_init = parse_double(key, value);
  } else if (key == "epsilon") {
    p.epsilon = parse_double(key, value);
  } else if (key == "sigma") {
    p.sigma = parse_double(key, value);
  } else if (key == "r_cut") {
    p.r_cut = parse_double(key, value);
  } else if (key == "skin") {
    p.skin = parse_double(key, value);
  } else if (key == "dt") {
    p.dt = parse_double(key, value);
  } else if (key == "reneigh_interval") {
    p.reneigh_interval = static_cast<int>(parse_int(key, value));
  } else if (key == "sort_interval") {
    p.sort_interval = static_cast<int>(parse_int(key, value));
  } else if (key == "n_iterations") {
    p.n_iterations = static_cast<int>(parse_int(key, value));
  } else if (key == "rng_seed") {
    p.rng_seed = static_cast<std::uint64_t>(parse_int(key, value));
  } else if (key == "min_separation") {
    p.min_separation = parse_double(key, value);
  } else if (key == "nodes") {
    s.n_nodes = static_cast<int>(parse_int(key, value));
  } else if (key == "host_threads") {
    s.host_threads = static_cast<int>(parse_int(key, value));
  } else if (key == "offload_threads") {
    s.offload_threads = static_cast<int>(parse_int(key, value));
  } else if (key == "offload_throttle" || key == "throttle") {
    s.offload_throttle = parse_double(key, value);
  } else if (key == "host_throttle") {
    s.host_throttle = parse_double(key, value);
  } else if (key == "sample_interval") {
    s.sample_interval = static_cast<int>(parse_int(key, value));
  } else if (key == "track_ids") {
    s.track_ids = parse_bool(key, value);
  } else if (key == "collect_digests") {
    s.collect_digests = parse_bool(key, value);
  } else if (key == "transport") {
    if (value == "inproc") {
      s.socket_transport = false;
    } else if (value == "socket") {
      s.socket_transport = true;
    } else {
      throw ConfigError("key 'transport': expected inproc or socket, got '" + value + "'");
    }
  } else if (key == "timeout_s") {
    s.timeout_s = parse_double(key, value);
  } else if (key == "out_dir") {
    cfg.out_dir = value;
  } else {
    throw ConfigError("unknown configuration key '" + key + "'");
  }
}

void config_load_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos || line[start] == '#') continue;
    const std::size_t eq = line.find('=', start);
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    auto trim = [](std::string sv) {
      const auto b = sv.find_first_not_of(" \t");
      const auto e = sv.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : sv.substr(b, e - b + 1);
    };
    config_apply(cfg, trim(line.substr(start, eq - start)), trim(line.substr(eq + 1)));
  }
}

}  // namespace offmd
