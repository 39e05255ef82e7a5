#include "offmd/cli.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "offmd/analysis.hpp"
#include "offmd/bench.hpp"
#include "offmd/config.hpp"
#include "offmd/report.hpp"
#include "offmd/scheduler.hpp"
#include "offmd/snapshot.hpp"
#include "offmd/socket_transport.hpp"

namespace offmd {
namespace {

constexpr const char* kUsage = R"(offmd — distributed Lennard-Jones dynamics with off-path neighbor rebuilds

usage: offmd <command> [--config FILE] [--KEY VALUE ...]

commands:
  run     simulate in one mode (or --mode both) and write thermo/timing CSVs
  sweep   run baseline+offpath over lists of intervals/sizes/skins
  model   calibrate the runtime model and compare its estimate to a measured run
  report  fit the temperature-divergence rate from two thermo CSVs

configuration keys (as --KEY VALUE flags or KEY=VALUE lines in --config; flags win):
  mode              baseline | offpath | offpath_sync_debug  (run also accepts: both)
  cells             fcc unit cells per axis, e.g. 10,10,10 (4 atoms per cell)
  density, t_init, epsilon, sigma, r_cut, skin, dt, rng_seed, min_separation
  reneigh_interval  iterations between neighbor-list rebuilds
  sort_interval     rebuilds between atom reorderings (0 = never)
  n_iterations      timesteps to run
  nodes             worker node count P (off-path modes add P offload workers)
  host_threads, offload_threads, offload_throttle, host_throttle
  sample_interval   thermo sampling cadence
  track_ids, collect_digests, timeout_s
  transport         inproc | socket
  out_dir           output directory (also env OFFMD_OUT_DIR; flags win)

command-specific flags:
  run:    --dump FILE (write final state), --load FILE (resume from state),
          --thermo-csv FILE --timing-csv FILE (override artifact paths),
          --workers N --worker-id K --peers h:p,h:p,...  (join a multi-process
          socket mesh as one worker; without --peers, transport=socket forks
          a local multi-process mesh)
  sweep:  --reneigh-list 1,5,20  --cells-list 6,8,10  --skin-list 0.3,0.4
  model:  (uses nodes/host_threads/offload_threads/offload_throttle/interval)
  report: --test FILE --reference FILE [--delta BOUND]

exit codes: 0 ok, 2 bad configuration, 3 protocol desync/transport failure,
            4 numerical blow-up
)";

struct Flags {
  // Ordered key/value pairs exactly as given; applied onto RunConfig after
  // any --config file so the command line wins.
  std::vector<std::pair<std::string, std::string>> kv;
  std::map<std::string, std::string> special;  // cli-only flags
  bool quiet = false;
};

bool is_special(const std::string& key) {
  static const char* names[] = {"config", "dump",        "load",      "workers",
                                "worker-id", "peers",    "test",      "reference",
                                "delta",  "reneigh-list", "cells-list", "skin-list",
                                "thermo-csv", "timing-csv", "tdr-csv", "sweep-csv",
                                "model-csv"};
  for (const char* n : names) {
    if (key == n) return true;
  }
  return false;
}

Flags parse_flags(const std::vector<std::string>& args, std::size_t start) {
  Flags f;
  for (std::size_t i = start; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a.rfind("--", 0) != 0) {
      throw ConfigError("expected a --flag, got '" + a + "'");
    }
    std::string key = a.substr(2);
    std::string value;
    const std::size_t eq = key.find('=');
    if (eq != std::string::npos) {
      value = key.substr(eq + 1);
      key = key.substr(0, eq);
    } else if (key == "quiet") {
      f.quiet = true;
      continue;
    } else {
      if (i + 1 >= args.size()) throw ConfigError("flag --" + key + " needs a value");
      value = args[++i];
    }
    if (key == "quiet") {
      f.quiet = true;
    } else if (is_special(key)) {
      f.special[key] = value;
    } else {
      // Accept dashes in config keys: --reneigh-interval == reneigh_interval.
      for (char& c : key) {
        if (c == '-') c = '_';
      }
      f.kv.emplace_back(key, value);
    }
  }
  return f;
}

RunConfig build_config(const Flags& f, bool* mode_both = nullptr) {
  RunConfig cfg;
  if (const char* env = std::getenv("OFFMD_OUT_DIR")) cfg.out_dir = env;
  auto it = f.special.find("config");
  if (it != f.special.end()) config_load_file(cfg, it->second);
  for (const auto& [k, v] : f.kv) {
    if (k == "mode" && v == "both" && mode_both) {
      *mode_both = true;
      cfg.setup.mode = RunMode::baseline;
      continue;
    }
    config_apply(cfg, k, v);
  }
  return cfg;
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
  if (cfg.out_dir.empty() || cfg.out_dir == ".") return name;
  return cfg.out_dir + "/" + name;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t next = s.find(',', pos);
    if (next == std::string::npos) {
      out.push_back(s.substr(pos));
      break;
    }
    out.push_back(s.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

void print_summary(const SimulationResult& r, std::ostream& os) {
  const ThermoSample& first = r.thermo.front();
  const ThermoSample& last = r.thermo.back();
  os << to_string(r.mode) << ": " << r.n_atoms << " atoms, " << r.n_nodes << " nodes, "
     << r.list_builds << " list builds\n"
     << "  T " << format_double(first.temperature) << " -> " << format_double(last.temperature)
     << ", E " << format_double(first.total) << " -> " << format_double(last.total) << "\n"
     << "  loop " << format_double(r.timing.t_total) << " s  (force "
     << format_double(r.timing.t_force) << ", neigh " << format_double(r.timing.t_neigh)
     << ", comm " << format_double(r.timing.t_comm) << ", wait "
     << format_double(r.timing.t_wait) << ", other " << format_double(r.timing.t_other)
     << ")\n";
}

// --------------------------------------------------------------------------
// Multi-process socket runs.

// Artifact destinations for one run; empty fields fall back to the defaults
// under out_dir.
struct ArtifactPaths {
  std::string thermo;
  std::string timing;
};

int worker_process_body(const SimParams& params, const RunSetup& setup, Endpoint& ep, int w,
                        const RunConfig& cfg, const ArtifactPaths& out,
                        const std::string& dump, bool quiet) {
  const int P = setup.n_nodes;
  if (w < P) {
    SimulationResult result = host_worker_main(params, setup, ep, w);
    if (w == 0) {
      const std::string thermo_path =
          out.thermo.empty()
              ? out_path(cfg, "thermo_" + std::string(to_string(setup.mode)) + ".csv")
              : out.thermo;
      write_csv_file(thermo_path, thermo_csv(cfg, result));
      write_csv_file(out.timing.empty() ? out_path(cfg, "timing.csv") : out.timing,
                     timing_csv(cfg, result));
      if (!dump.empty()) write_snapshot_file(dump, result.final_state);
      if (!quiet) print_summary(result, std::cout);
    }
  } else {
    offload_worker_loop(params, setup, ep, w - P);
  }
  return 0;
}

// Fork one process per worker over a pre-bound localhost mesh.  The parent
// runs worker 0 so results land in the launching process.
int run_forked_mesh(const SimParams& params, const RunSetup& setup, const RunConfig& cfg,
                    const ArtifactPaths& out, const std::string& dump, bool quiet) {
  const int P = setup.n_nodes;
  const int W = setup.mode == RunMode::baseline ? P : 2 * P;
  std::vector<int> fds(W);
  std::vector<std::string> addrs(W);
  for (int w = 0; w < W; ++w) {
    auto [fd, addr] = SocketFabric::bind_local();
    fds[w] = fd;
    addrs[w] = addr;
  }
  std::vector<pid_t> pids;
  for (int w = 1; w < W; ++w) {
    const pid_t pid = ::fork();
    if (pid < 0) throw TransportError("fork failed");
    if (pid == 0) {
      int code = 0;
      try {
        for (int o = 0; o < W; ++o) {
          if (o != w) ::close(fds[o]);
        }
        auto ep = SocketFabric::establish_mesh(w, fds[w], addrs, setup.timeout_s);
        worker_process_body(params, setup, *ep, w, cfg, out, dump, quiet);
      } catch (const ConfigError& e) {
        std::fprintf(stderr, "worker %d: configuration error: %s\n", w, e.what());
        code = 2;
      } catch (const NumericalBlowupError& e) {
        std::fprintf(stderr, "worker %d: numerical blow-up: %s\n", w, e.what());
        code = 4;
      } catch (const std::exception& e) {
        std::fprintf(stderr, "worker %d: %s\n", w, e.what());
        code = 3;
      }
      std::exit(code);
    }
    pids.push_back(pid);
  }

  int my_code = 0;
  try {
    for (int o = 1; o < W; ++o) ::close(fds[o]);
    auto ep = SocketFabric::establish_mesh(0, fds[0], addrs, setup.timeout_s);
    worker_process_body(params, setup, *ep, 0, cfg, out, dump, quiet);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "worker 0: configuration error: %s\n", e.what());
    my_code = 2;
  } catch (const NumericalBlowupError& e) {
    std::fprintf(stderr, "worker 0: numerical blow-up: %s\n", e.what());
    my_code = 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "worker 0: %s\n", e.what());
    my_code = 3;
  }

  bool saw2 = my_code == 2, saw3 = my_code == 3, saw4 = my_code == 4;
  for (const pid_t pid : pids) {
    int status = 0;
    ::waitpid(pid, &status, 0);
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : 3;
    saw2 |= code == 2;
    saw3 |= code != 0 && code != 2 && code != 4;
    saw4 |= code == 4;
  }
  // Root-cause preference: a blow-up or config error explains the transport
  // errors the dying worker caused in its peers.
  if (saw4) return 4;
  if (saw2) return 2;
  if (saw3) return 3;
  return 0;
}

// --------------------------------------------------------------------------
// Commands.

int cmd_run(const Flags& flags) {
  bool both = false;
  RunConfig cfg = build_config(flags, &both);

  SnapshotData loaded;
  if (auto it = flags.special.find("load"); it != flags.special.end()) {
    loaded = read_snapshot_file(it->second);
    cfg.setup.initial_state = &loaded;
  }
  std::string dump;
  if (auto it = flags.special.find("dump"); it != flags.special.end()) {
    dump = it->second;
    cfg.setup.collect_final_state = true;
  }
  ArtifactPaths out;
  if (auto it = flags.special.find("thermo-csv"); it != flags.special.end()) {
    if (both) {
      throw ConfigError("--thermo-csv conflicts with --mode both: the arms would "
                        "overwrite each other (use --out-dir instead)");
    }
    out.thermo = it->second;
  }
  if (auto it = flags.special.find("timing-csv"); it != flags.special.end()) {
    out.timing = it->second;
  }

  // One worker of an externally launched socket mesh.
  if (auto it = flags.special.find("peers"); it != flags.special.end()) {
    if (both) throw ConfigError("--mode both cannot drive a single mesh worker");
    const auto wit = flags.special.find("worker-id");
    if (wit == flags.special.end()) throw ConfigError("--peers requires --worker-id");
    const int w = std::atoi(wit->second.c_str());
    const std::vector<std::string> addrs = split_list(it->second);
    const int P = cfg.setup.n_nodes;
    const int W = cfg.setup.mode == RunMode::baseline ? P : 2 * P;
    if (static_cast<int>(addrs.size()) != W) {
      throw ConfigError("mesh needs " + std::to_string(W) + " workers (nodes=" +
                        std::to_string(P) + ", mode " + to_string(cfg.setup.mode) + "), got " +
                        std::to_string(addrs.size()) + " peers");
    }
    if (w < 0 || w >= W) throw ConfigError("worker-id out of range");
    cfg.params.validate();
    auto ep = SocketFabric::connect_mesh(w, addrs, cfg.setup.timeout_s);
    return worker_process_body(cfg.params, cfg.setup, *ep, w, cfg, out, dump, flags.quiet);
  }

  if (cfg.setup.socket_transport && !both) {
    return run_forked_mesh(cfg.params, cfg.setup, cfg, out, dump, flags.quiet);
  }

  auto run_one = [&](RunMode mode) {
    RunConfig c = cfg;
    c.setup.mode = mode;
    SimulationResult result = run_simulation(c.params, c.setup);
    const std::string thermo_path =
        out.thermo.empty() ? out_path(c, "thermo_" + std::string(to_string(mode)) + ".csv")
                           : out.thermo;
    write_csv_file(thermo_path, thermo_csv(c, result));
    if (!dump.empty()) write_snapshot_file(dump, result.final_state);
    if (!flags.quiet) print_summary(result, std::cout);
    return result;
  };

  if (!both) {
    SimulationResult result = run_one(cfg.setup.mode);
    write_csv_file(out.timing.empty() ? out_path(cfg, "timing.csv") : out.timing,
                   timing_csv(cfg, result));
    return 0;
  }

  // --mode both: run the two arms and a quick-look comparison.
  SimulationResult base = run_one(RunMode::baseline);
  SimulationResult off = run_one(RunMode::offpath);
  Csv timing = timing_csv(cfg, base);
  {
    RunConfig c = cfg;
    c.setup.mode = RunMode::offpath;
    append_timing_row(timing, c, off);
  }
  write_csv_file(out.timing.empty() ? out_path(cfg, "timing.csv") : out.timing, timing);

  const double gain = improvement(base.timing.t_total, off.timing.t_total);
  const double comm_bound = max_comm_offload_improvement(base.timing);
  const TdrReport tdr = compute_tdr(off.thermo, base.thermo, 0.05);
  Csv summary;
  summary.meta = config_kv(cfg);
  summary.columns = {"baseline_t_total", "offpath_t_total", "improvement_pct",
                     "max_comm_offload_pct", "tdr_alpha", "tdr_beta"};
  summary.rows.push_back({format_double(base.timing.t_total), format_double(off.timing.t_total),
                          format_double(gain * 100.0), format_double(comm_bound),
                          format_double(tdr.alpha), format_double(tdr.beta)});
  write_csv_file(out_path(cfg, "comparison.csv"), summary);
  if (!flags.quiet) {
    std::cout << "improvement " << format_double(gain * 100.0) << "% (comm-offload bound "
              << format_double(comm_bound) << "%), divergence alpha " << format_double(tdr.alpha)
              << " per iteration\n";
  }
  return 0;
}

int cmd_sweep(const Flags& flags) {
  RunConfig cfg = build_config(flags);
  std::vector<int> intervals{cfg.params.reneigh_interval};
  std::vector<int> cells{cfg.params.unit_cells[0]};
  std::vector<double> skins{cfg.params.skin};
  if (auto it = flags.special.find("reneigh-list"); it != flags.special.end()) {
    intervals.clear();
    for (const auto& s : split_list(it->second)) intervals.push_back(std::atoi(s.c_str()));
  }
  if (auto it = flags.special.find("cells-list"); it != flags.special.end()) {
    cells.clear();
    for (const auto& s : split_list(it->second)) cells.push_back(std::atoi(s.c_str()));
  }
  if (auto it = flags.special.find("skin-list"); it != flags.special.end()) {
    skins.clear();
    for (const auto& s : split_list(it->second)) skins.push_back(std::atof(s.c_str()));
  }

  Csv csv;
  csv.meta = config_kv(cfg);
  csv.columns = {"cells",   "n_atoms",        "skin",
                 "reneigh_interval", "baseline_t_total", "offpath_t_total",
                 "improvement_pct",  "max_comm_offload_pct"};

  for (const int c : cells) {
    for (const double skin : skins) {
      for (const int interval : intervals) {
        RunConfig point = cfg;
        point.params.unit_cells = {c, c, c};
        point.params.skin = skin;
        point.params.reneigh_interval = interval;
        point.setup.collect_digests = false;
        point.setup.track_ids = false;

        point.setup.mode = RunMode::baseline;
        const SimulationResult base = run_simulation(point.params, point.setup);
        point.setup.mode = RunMode::offpath;
        const SimulationResult off = run_simulation(point.params, point.setup);

        const double gain = improvement(base.timing.t_total, off.timing.t_total);
        csv.rows.push_back({std::to_string(c), std::to_string(base.n_atoms),
                            format_double(skin), std::to_string(interval),
                            format_double(base.timing.t_total),
                            format_double(off.timing.t_total), format_double(gain * 100.0),
                            format_double(max_comm_offload_improvement(base.timing))});
        if (!flags.quiet) {
          std::cout << "cells " << c << " skin " << format_double(skin) << " interval "
                    << interval << ": improvement " << format_double(gain * 100.0) << "%\n";
        }
      }
    }
  }
  std::string path = out_path(cfg, "sweep.csv");
  if (auto it = flags.special.find("sweep-csv"); it != flags.special.end()) path = it->second;
  write_csv_file(path, csv);
  return 0;
}

int cmd_model(const Flags& flags) {
  RunConfig cfg = build_config(flags);
  cfg.setup.mode = RunMode::offpath;
  cfg.setup.collect_digests = false;
  cfg.setup.track_ids = false;

  const PerfMeasurement m = measure_for_model(cfg.params, cfg.setup);
  const double estimate =
      estimate_offpath_time(m, static_cast<std::uint64_t>(cfg.params.n_iterations),
                            cfg.params.reneigh_interval);
  const SimulationResult measured = run_simulation(cfg.params, cfg.setup);
  const double rel_err =
      std::abs(measured.timing.t_total - estimate) / measured.timing.t_total;

  Csv csv;
  csv.meta = config_kv(cfg);
  csv.columns = {"label",      "host_t_force", "host_t_neigh", "host_t_comm",
                 "off_t_force", "off_t_comm",  "host_t_total", "estimate",
                 "measured",   "rel_err"};
  csv.rows.push_back({m.label(), format_double(m.host_t_force), format_double(m.host_t_neigh),
                      format_double(m.host_t_comm), format_double(m.off_t_force),
                      format_double(m.off_t_comm), format_double(m.host_t_total),
                      format_double(estimate), format_double(measured.timing.t_total),
                      format_double(rel_err)});
  std::string path = out_path(cfg, "model.csv");
  if (auto it = flags.special.find("model-csv"); it != flags.special.end()) path = it->second;
  write_csv_file(path, csv);
  if (!flags.quiet) {
    std::cout << "config " << m.label() << " throttle "
              << format_double(cfg.setup.offload_throttle) << ": estimate "
              << format_double(estimate) << " s, measured "
              << format_double(measured.timing.t_total) << " s, relative error "
              << format_double(rel_err * 100.0) << "%\n";
  }
  return 0;
}

int cmd_report(const Flags& flags) {
  const auto test_it = flags.special.find("test");
  const auto ref_it = flags.special.find("reference");
  if (test_it == flags.special.end() || ref_it == flags.special.end()) {
    throw ConfigError("report needs --test and --reference thermo CSVs");
  }
  double delta = 0.05;
  if (auto it = flags.special.find("delta"); it != flags.special.end()) {
    delta = std::atof(it->second.c_str());
  }
  const Csv test_csv = read_csv_file(test_it->second);
  const Csv ref_csv = read_csv_file(ref_it->second);
  const TdrReport rep =
      compute_tdr(thermo_from_csv(test_csv), thermo_from_csv(ref_csv), delta);

  RunConfig cfg = build_config(flags);
  std::string path = out_path(cfg, "tdr.csv");
  if (auto it = flags.special.find("tdr-csv"); it != flags.special.end()) path = it->second;
  write_csv_file(path, tdr_csv(rep));
  if (!flags.quiet) {
    std::cout << "alpha " << format_double(rep.alpha) << " per iteration, beta "
              << format_double(rep.beta) << ", max |dT| " << format_double(rep.max_abs_delta)
              << (rep.pass() ? " (within " : " (exceeds ") << format_double(rep.delta_threshold)
              << ")\n";
  }
  return rep.pass() ? 0 : 1;
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
  try {
    if (args.empty() || args[0] == "--help" || args[0] == "help" || args[0] == "-h") {
      std::cout << kUsage;
      return args.empty() ? 2 : 0;
    }
    const std::string& cmd = args[0];
    const Flags flags = parse_flags(args, 1);
    if (cmd == "run") return cmd_run(flags);
    if (cmd == "sweep") return cmd_sweep(flags);
    if (cmd == "model") return cmd_model(flags);
    if (cmd == "report") return cmd_report(flags);
    throw ConfigError("unknown command '" + cmd + "' (run, sweep, model, report)");
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalBlowupError& e) {
    std::cerr << "numerical blow-up: " << e.what() << "\n";
    return 4;
  } catch (const ProtocolDesyncError& e) {
    std::cerr << "protocol desync: " << e.what() << "\n";
    return 3;
  } catch (const TransportError& e) {
    std::cerr << "transport failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace offmd
