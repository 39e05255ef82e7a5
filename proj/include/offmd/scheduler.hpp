#ifndef OFFMD_SCHEDULER_HPP
#define OFFMD_SCHEDULER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "offmd/params.hpp"
#include "offmd/snapshot.hpp"
#include "offmd/transport.hpp"
#include "offmd/vec3.hpp"

namespace offmd {

// How iterations are driven.
//
//   baseline          every worker does everything in program order; on a
//                     rebuild iteration forces wait for the fresh list.
//   offpath           neighbor-list rebuilds run on the host while the
//                     (slower) offload worker computes the same iteration's
//                     forces against the previous list; the finished forces
//                     are migrated into the new slot order by replaying the
//                     host's exchange plan and sort permutation.
//   offpath_sync_debug  the same messages and offload kernels, but serialized
//                     so the offload consumes the *new* list — bitwise equal
//                     to baseline by construction, used to validate the
//                     machinery apart from the algorithmic reordering.
enum class RunMode { baseline, offpath, offpath_sync_debug };

const char* to_string(RunMode mode);
RunMode run_mode_from_string(const std::string& name);  // ConfigError on unknown

struct ThermoSample {
  std::uint64_t iteration = 0;
  double temperature = 0.0;
  double kinetic = 0.0;
  double potential = 0.0;
  double total = 0.0;  // kinetic + potential
};

// Conserved-quantity watchdogs, sampled with the thermo cadence.
struct ConservationSample {
  std::uint64_t iteration = 0;
  Vec3 momentum;              // global sum of m*v
  std::uint64_t n_atoms = 0;  // global owned-atom count
};

// Wall-clock decomposition of the iteration loop (node 0's view; setup is
// excluded).  force + neigh + comm + wait + other == total by construction,
// so force + neigh + comm <= total always holds.
struct TimingBreakdown {
  double t_total = 0.0;
  double t_force = 0.0;  // host force kernels (incl. any throttle stretch)
  double t_neigh = 0.0;  // neighbor-list builds
  double t_comm = 0.0;   // communicate, or exchange+border on rebuilds
  double t_wait = 0.0;   // off-path: host blocked on the offload's forces
  double t_other = 0.0;  // integration, sort, serialization, sampling
};

// One row per iteration (node 0): which list version the forces consumed,
// whether this iteration rebuilt/sorted, and where the time went.
struct IterationRecord {
  std::uint64_t iteration = 0;
  std::uint32_t list_version = 0;
  bool rebuild = false;
  bool sorted = false;
  double t_comm = 0.0;
  double t_neigh = 0.0;
  double t_force = 0.0;
  double t_wait = 0.0;
  double t_other = 0.0;
  double offload_force_wall = 0.0;  // off-path rebuilds: offload kernel wall (incl. throttle)
};

// Raw per-call wall times (node 0), the inputs of the performance model.
struct PerCallTimes {
  std::vector<double> force;         // host force_compute calls
  std::vector<double> neigh;         // neighbor_build calls (in-loop)
  std::vector<double> rebuild_comm;  // exchange + border, per rebuild
  std::vector<double> halo_refresh;  // communicate, per non-rebuild iteration
};

struct SimulationResult {
  RunMode mode = RunMode::baseline;
  int n_nodes = 1;
  std::uint64_t n_atoms = 0;
  std::uint32_t list_builds = 0;  // neighbor_build calls incl. setup
  std::vector<ThermoSample> thermo;
  std::vector<ConservationSample> conservation;
  std::vector<std::uint64_t> digests;  // per-iteration trajectory hash, [0, T]
  TimingBreakdown timing;
  std::vector<IterationRecord> ledger;
  PerCallTimes calls;
  SnapshotData final_state;  // filled when RunSetup::collect_final_state
};

struct RunSetup {
  RunMode mode = RunMode::baseline;
  int n_nodes = 2;  // desk-scale default: two node pairs
  int host_threads = 1;
  int offload_threads = 1;
  // Kernel-latency stretch factors emulating a slower processor (>= 1).
  // offload_throttle applies to the offload workers' force kernels;
  // host_throttle applies to the host's force and neighbor kernels and
  // exists so a plain run can stand in for "the whole computation on the
  // offload processor" when calibrating the performance model.
  double offload_throttle = 2.0;
  double host_throttle = 1.0;
  bool track_ids = true;         // carry global ids (identity checks, dumps)
  bool collect_digests = true;   // per-iteration trajectory hashes
  bool collect_final_state = false;
  int sample_interval = 10;      // thermo cadence in iterations
  double timeout_s = 600.0;      // protocol receive timeout
  bool socket_transport = false; // run the local mesh over TCP sockets
  const SnapshotData* initial_state = nullptr;  // resume instead of lattice
};

// Spawns the worker mesh (n_nodes host workers, plus n_nodes offload workers
// in the off-path modes), runs the loop, and returns node 0's view with the
// globally reduced series.  Exceptions from any worker propagate; the rest of
// the mesh is woken and unwound.
SimulationResult run_simulation(const SimParams& params, const RunSetup& setup);

// Convenience entry points for the two benchmark arms.
SimulationResult run_baseline(const SimParams& params, RunSetup setup = {});
SimulationResult run_offpath(const SimParams& params, RunSetup setup = {},
                             bool sync_debug = false);

// Worker bodies, exposed for the multi-process launcher and for tests that
// drive a mesh directly.  Host workers are ranks [0, P); offload workers are
// ranks [P, 2P), serving node (rank - P).
SimulationResult host_worker_main(const SimParams& params, const RunSetup& setup,
                                  Endpoint& ep, int node);
void offload_worker_loop(const SimParams& params, const RunSetup& setup,
                         Endpoint& ep, int node);

}  // namespace offmd

#endif
