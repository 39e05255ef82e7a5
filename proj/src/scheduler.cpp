#include "offmd/scheduler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <exception>
#include <memory>
#include <thread>
#include <utility>

#include "offmd/decomposition.hpp"
#include "offmd/dynamics.hpp"
#include "offmd/halo.hpp"
#include "offmd/lattice.hpp"
#include "offmd/neighbor.hpp"
#include "offmd/parallel.hpp"
#include "offmd/protocol.hpp"
#include "offmd/socket_transport.hpp"
#include "offmd/wire.hpp"

namespace offmd {

const char* to_string(RunMode mode) {
  switch (mode) {
    case RunMode::baseline: return "baseline";
    case RunMode::offpath: return "offpath";
    case RunMode::offpath_sync_debug: return "offpath_sync_debug";
  }
  return "?";
}

RunMode run_mode_from_string(const std::string& name) {
  if (name == "baseline") return RunMode::baseline;
  if (name == "offpath") return RunMode::offpath;
  if (name == "offpath_sync_debug") return RunMode::offpath_sync_debug;
  throw ConfigError("unknown run mode '" + name +
                    "' (expected baseline, offpath, or offpath_sync_debug)");
}

namespace {

// --------------------------------------------------------------------------
// Trajectory digest: FNV-1a over the owned positions and velocities.  Used to
// compare two runs for bitwise-equal trajectories; any representation change
// shows up as a digest split at the first diverging iteration.

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

std::uint64_t state_digest(const AtomStore& atoms) {
  std::uint64_t h = kFnvOffset;
  const std::uint64_t n = atoms.n_local;
  h = fnv1a(h, &n, sizeof n);
  if (n > 0) {
    h = fnv1a(h, atoms.x.data(), n * sizeof(Vec3));
    h = fnv1a(h, atoms.v.data(), n * sizeof(Vec3));
  }
  return h;
}

// --------------------------------------------------------------------------
// Host <-> offload payloads.

std::vector<std::uint8_t> make_snapshot_msg(std::uint64_t iteration, const AtomStore& atoms) {
  WireWriter w;
  msg_header(w, MsgKind::snapshot, iteration);
  w.u64(atoms.n_local);
  for (std::uint64_t i = 0; i < atoms.n_local; ++i) w.vec3(atoms.x[i]);
  return w.take();
}

std::vector<std::uint8_t> make_plan_perm_msg(std::uint64_t iteration, const ExchangePlan& plan,
                                             bool sorted, const PermutationRecord& perm) {
  WireWriter w;
  msg_header(w, MsgKind::plan_perm, iteration);
  write_plan(w, plan);
  w.u32(sorted ? 1 : 0);
  if (sorted) write_perm(w, perm);
  return w.take();
}

std::vector<std::uint8_t> make_list_map_msg(std::uint64_t iteration, const AtomStore& atoms,
                                            const NeighborList& list, const BorderMap& map) {
  WireWriter w;
  msg_header(w, MsgKind::list_map, iteration);
  w.u64(atoms.n_local);
  w.u64(atoms.n_ghost);
  for (std::uint64_t g = 0; g < atoms.n_ghost; ++g) w.vec3(atoms.shift[atoms.n_local + g]);
  write_border_map(w, map);
  write_nlist(w, list);
  w.u32(atoms.tracks_ids() ? 1 : 0);
  if (atoms.tracks_ids()) {
    for (std::uint64_t i = 0; i < atoms.n_local; ++i) w.u64(atoms.gid[i]);
  }
  return w.take();
}

std::vector<std::uint8_t> make_f_result_msg(std::uint64_t iteration,
                                            const std::vector<Vec3>& forces, double potential,
                                            double force_wall,
                                            const std::vector<std::uint64_t>* ids) {
  WireWriter w;
  msg_header(w, MsgKind::f_result, iteration);
  write_vec3_array(w, forces);
  w.f64(potential);
  w.f64(force_wall);
  w.u32(ids ? 1 : 0);
  if (ids) write_u64_array(w, *ids);
  return w.take();
}

// Offload-side mirror of the host's rebuild-epoch state.
struct OffloadEpoch {
  AtomStore atoms;  // x/shift sized n_local+n_ghost; f owned; v unused
  NeighborList list;
  BorderMap map;
};

OffloadEpoch read_list_map(const std::vector<std::uint8_t>& payload, std::uint64_t iteration,
                           const char* what) {
  WireReader r(payload);
  expect_msg(r, MsgKind::list_map, iteration, what);
  OffloadEpoch e;
  const std::uint64_t n_local = r.u64();
  const std::uint64_t n_ghost = r.u64();
  e.atoms.n_local = n_local;
  e.atoms.n_ghost = n_ghost;
  e.atoms.x.assign(n_local + n_ghost, Vec3{});
  e.atoms.shift.assign(n_local + n_ghost, Vec3{});
  e.atoms.f.assign(n_local, Vec3{});
  for (std::uint64_t g = 0; g < n_ghost; ++g) e.atoms.shift[n_local + g] = r.vec3();
  e.map = read_border_map(r);
  e.list = read_nlist(r);
  const bool has_ids = r.u32() != 0;
  if (has_ids) {
    e.atoms.gid.resize(n_local);
    for (std::uint64_t i = 0; i < n_local; ++i) e.atoms.gid[i] = r.u64();
  }
  r.expect_done();
  if (e.map.n_local_at_build != n_local || e.map.n_ghost_total != n_ghost ||
      e.list.n_local_at_build != n_local) {
    throw ProtocolDesyncError("list_map payload inconsistent: " + std::to_string(n_local) + "+" +
                              std::to_string(n_ghost) + " slots vs map " +
                              std::to_string(e.map.n_local_at_build) + "+" +
                              std::to_string(e.map.n_ghost_total) + ", list " +
                              std::to_string(e.list.n_local_at_build));
  }
  return e;
}

// --------------------------------------------------------------------------
// Reductions to node 0 (thermo samples, conservation watchdogs, digests).

struct LocalSample {
  double ke2 = 0.0;  // sum of |v|^2 over owned atoms
  double pe = 0.0;   // this worker's share of the pair-potential sum
  Vec3 momentum;
  std::uint64_t n_local = 0;
};

LocalSample local_sample(const AtomStore& atoms, double pe) {
  LocalSample s;
  s.ke2 = kinetic_sum(atoms);
  s.pe = pe;
  for (std::uint64_t i = 0; i < atoms.n_local; ++i) s.momentum += atoms.v[i];
  s.n_local = atoms.n_local;
  return s;
}

// Per-iteration bookkeeping shared by every host worker; node 0 reduces, the
// rest send their partials.  Send/receive order is fixed (digest before
// thermo, ranks ascending) so the combined values are run-to-run identical.
class Reducer {
 public:
  Reducer(Endpoint& ep, int node, int n_nodes, std::uint64_t n_atoms_global,
          const RunSetup& setup, SimulationResult* result)
      : ep_(ep), node_(node), n_nodes_(n_nodes), n_atoms_(n_atoms_global),
        setup_(setup), result_(result) {}

  void iteration_done(std::uint64_t t, const AtomStore& atoms, double pe, bool sampled) {
    if (setup_.collect_digests) {
      const std::uint64_t d = state_digest(atoms);
      if (node_ == 0) {
        std::uint64_t h = kFnvOffset;
        h = fnv1a(h, &d, sizeof d);
        for (int w = 1; w < n_nodes_; ++w) {
          Message m = ep_.recv(w, Tag::control, setup_.timeout_s);
          WireReader r(m.payload);
          expect_msg(r, MsgKind::digest, t, "digest gather");
          const std::uint64_t dw = r.u64();
          r.expect_done();
          h = fnv1a(h, &dw, sizeof dw);
        }
        result_->digests.push_back(h);
      } else {
        WireWriter w;
        msg_header(w, MsgKind::digest, t);
        w.u64(d);
        ep_.send(0, Tag::control, w.take());
      }
    }
    if (!sampled) return;

    LocalSample s = local_sample(atoms, pe);
    if (node_ == 0) {
      for (int w = 1; w < n_nodes_; ++w) {
        Message m = ep_.recv(w, Tag::control, setup_.timeout_s);
        WireReader r(m.payload);
        expect_msg(r, MsgKind::thermo, t, "thermo gather");
        s.ke2 += r.f64();
        s.pe += r.f64();
        s.momentum += r.vec3();
        s.n_local += r.u64();
        r.expect_done();
      }
      ThermoSample th;
      th.iteration = t;
      th.kinetic = 0.5 * s.ke2;
      th.temperature = s.ke2 / (3.0 * static_cast<double>(n_atoms_));
      th.potential = s.pe;
      th.total = th.kinetic + th.potential;
      result_->thermo.push_back(th);
      ConservationSample c;
      c.iteration = t;
      c.momentum = s.momentum;
      c.n_atoms = s.n_local;
      result_->conservation.push_back(c);
    } else {
      WireWriter w;
      msg_header(w, MsgKind::thermo, t);
      w.f64(s.ke2);
      w.f64(s.pe);
      w.vec3(s.momentum);
      w.u64(s.n_local);
      ep_.send(0, Tag::control, w.take());
    }
  }

 private:
  Endpoint& ep_;
  int node_;
  int n_nodes_;
  std::uint64_t n_atoms_;
  const RunSetup& setup_;
  SimulationResult* result_;
};

AtomStore store_from_snapshot(const SnapshotData& snap, const SimParams& params,
                              const Decomposition& d, bool track_ids) {
  const GlobalBox box = GlobalBox::from_params(params);
  for (int a = 0; a < 3; ++a) {
    const double want = box.length[a];
    if (std::abs(snap.box_length[a] - want) > 1e-9 * want) {
      throw ConfigError("snapshot box length " + format_double(snap.box_length[a]) +
                        " on axis " + std::to_string(a) + " does not match the configured box " +
                        format_double(want));
    }
  }
  AtomStore atoms;
  for (const auto& row : snap.rows) {
    const Vec3 pos = wrap_periodic(row.x, box);
    if (d.owns(pos)) atoms.push_owned(pos, row.v, row.id, track_ids);
  }
  // Unlike lattice creation, an empty subdomain is legal when resuming: the
  // configuration came from a real state, not a misconfigured grid.
  return atoms;
}

}  // namespace

// ---------------------------------------------------------------------------
// Host worker.

SimulationResult host_worker_main(const SimParams& params, const RunSetup& setup,
                                  Endpoint& ep, int node) {
  const int P = setup.n_nodes;
  const int offload_rank = P + node;  // my offload partner (off-path modes)
  const bool offpath = setup.mode != RunMode::baseline;
  const bool async = setup.mode == RunMode::offpath;
  const double timeout = setup.timeout_s;

  const Decomposition d = create_decomposition(params, P, node);
  ThreadPool pool(setup.host_threads);
  const Throttle throttle(setup.host_throttle);

  AtomStore atoms = setup.initial_state
                        ? store_from_snapshot(*setup.initial_state, params, d, setup.track_ids)
                        : create_lattice(params, d, setup.track_ids);
  const std::uint64_t n_atoms_global =
      setup.initial_state ? setup.initial_state->rows.size() : params.total_atoms();

  SimulationResult result;
  result.mode = setup.mode;
  result.n_nodes = P;
  result.n_atoms = n_atoms_global;
  Reducer reduce(ep, node, P, n_atoms_global, setup, &result);

  // --- Setup epoch: home every atom, build ghosts and the first list, and
  // compute the forces the first half-kick needs.
  exchange(atoms, d, ep, 0, timeout);
  BorderMap map = border(atoms, d, params, ep, 0, timeout);
  double nb_cpu = 0.0;
  NeighborList list = neighbor_build(atoms, params, d, pool, 0, &nb_cpu);
  throttle.pay(nb_cpu);
  result.list_builds = 1;
  std::uint32_t list_version = 1;
  ForceResult fr = force_compute(atoms, list, params, pool);
  throttle.pay(fr.kernel_cpu);
  double current_pe = fr.potential;

  reduce.iteration_done(0, atoms, current_pe, true);

  // The async arm primes the offload with the setup epoch; the sync-debug arm
  // instead ships each epoch inside the rebuild iteration that produced it.
  if (async) {
    ep.send(offload_rank, Tag::nlist, make_list_map_msg(0, atoms, list, map));
  }

  const auto T = static_cast<std::uint64_t>(params.n_iterations);
  const auto interval = static_cast<std::uint64_t>(params.reneigh_interval);
  const std::uint64_t sort_cycle =
      params.sort_interval > 0 ? interval * static_cast<std::uint64_t>(params.sort_interval) : 0;
  const auto si = static_cast<std::uint64_t>(setup.sample_interval);

  const double loop_start = wall_seconds();
  for (std::uint64_t t = 1; t <= T; ++t) {
    IterationRecord rec;
    rec.iteration = t;
    rec.rebuild = (t % interval == 0);
    rec.sorted = rec.rebuild && sort_cycle != 0 && (t % sort_cycle == 0);
    const double t_begin = wall_seconds();

    initial_integrate(atoms, params);

    if (!rec.rebuild) {
      const double c0 = wall_seconds();
      communicate(atoms, map, ep, 0, t, timeout);
      const double c1 = wall_seconds();
      fr = force_compute(atoms, list, params, pool);
      throttle.pay(fr.kernel_cpu);
      const double c2 = wall_seconds();
      current_pe = fr.potential;
      rec.t_comm = c1 - c0;
      rec.t_force = c2 - c1;
      rec.list_version = list_version;
      result.calls.halo_refresh.push_back(rec.t_comm);
      result.calls.force.push_back(rec.t_force);
    } else if (!offpath) {
      const double e0 = wall_seconds();
      exchange(atoms, d, ep, t, timeout);
      const double e1 = wall_seconds();
      if (rec.sorted) sort_atoms(atoms, d);
      const double b0 = wall_seconds();
      map = border(atoms, d, params, ep, t, timeout);
      const double b1 = wall_seconds();
      list = neighbor_build(atoms, params, d, pool, t, &nb_cpu);
      throttle.pay(nb_cpu);
      const double n1 = wall_seconds();
      ++list_version;
      ++result.list_builds;
      fr = force_compute(atoms, list, params, pool);
      throttle.pay(fr.kernel_cpu);
      const double f1 = wall_seconds();
      current_pe = fr.potential;
      rec.t_comm = (e1 - e0) + (b1 - b0);
      rec.t_neigh = n1 - b1;
      rec.t_force = f1 - n1;
      rec.list_version = list_version;
      result.calls.rebuild_comm.push_back(rec.t_comm);
      result.calls.neigh.push_back(rec.t_neigh);
      result.calls.force.push_back(rec.t_force);
    } else if (async) {
      // Off-path rebuild: the offload computes this iteration's forces
      // against the previous list while this worker rebuilds.
      ep.send(offload_rank, Tag::x_snapshot, make_snapshot_msg(t, atoms));
      const double e0 = wall_seconds();
      ExchangePlan plan = exchange(atoms, d, ep, t, timeout);
      const double e1 = wall_seconds();
      PermutationRecord perm;
      if (rec.sorted) perm = sort_atoms(atoms, d);
      const double b0 = wall_seconds();
      map = border(atoms, d, params, ep, t, timeout);
      const double b1 = wall_seconds();
      list = neighbor_build(atoms, params, d, pool, t, &nb_cpu);
      throttle.pay(nb_cpu);
      const double n1 = wall_seconds();
      ++list_version;
      ++result.list_builds;
      ep.send(offload_rank, Tag::plan, make_plan_perm_msg(t, plan, rec.sorted, perm));

      const double w0 = wall_seconds();
      Message m = ep.recv(offload_rank, Tag::f_result, timeout);
      const double w1 = wall_seconds();
      WireReader r(m.payload);
      expect_msg(r, MsgKind::f_result, t, "force result");
      std::vector<Vec3> forces = read_vec3_array(r);
      current_pe = r.f64();
      rec.offload_force_wall = r.f64();
      const bool has_ids = r.u32() != 0;
      std::vector<std::uint64_t> ids;
      if (has_ids) ids = read_u64_array(r);
      r.expect_done();
      if (forces.size() != atoms.n_local) {
        throw ProtocolDesyncError("force result carries " + std::to_string(forces.size()) +
                                  " entries for " + std::to_string(atoms.n_local) +
                                  " owned atoms at iteration " + std::to_string(t));
      }
      if (has_ids && atoms.tracks_ids()) {
        for (std::uint64_t i = 0; i < atoms.n_local; ++i) {
          if (ids[i] != atoms.gid[i]) {
            throw ProtocolDesyncError(
                "index mapping diverged at iteration " + std::to_string(t) + ": slot " +
                std::to_string(i) + " holds atom " + std::to_string(atoms.gid[i]) +
                " but the replayed forces belong to atom " + std::to_string(ids[i]));
          }
        }
      }
      atoms.f = std::move(forces);
      rec.t_comm = (e1 - e0) + (b1 - b0);
      rec.t_neigh = n1 - b1;
      rec.t_wait = w1 - w0;
      rec.list_version = list_version - 1;  // forces consumed the previous list
      result.calls.rebuild_comm.push_back(rec.t_comm);
      result.calls.neigh.push_back(rec.t_neigh);
    } else {
      // Synchronous debug arm: same messages, no overlap — the offload
      // computes against the *new* list, so the run is bitwise baseline.
      const double e0 = wall_seconds();
      exchange(atoms, d, ep, t, timeout);
      const double e1 = wall_seconds();
      if (rec.sorted) sort_atoms(atoms, d);
      const double b0 = wall_seconds();
      map = border(atoms, d, params, ep, t, timeout);
      const double b1 = wall_seconds();
      list = neighbor_build(atoms, params, d, pool, t, &nb_cpu);
      throttle.pay(nb_cpu);
      const double n1 = wall_seconds();
      ++list_version;
      ++result.list_builds;
      ep.send(offload_rank, Tag::nlist, make_list_map_msg(t, atoms, list, map));
      ep.send(offload_rank, Tag::x_snapshot, make_snapshot_msg(t, atoms));

      const double w0 = wall_seconds();
      Message m = ep.recv(offload_rank, Tag::f_result, timeout);
      const double w1 = wall_seconds();
      WireReader r(m.payload);
      expect_msg(r, MsgKind::f_result, t, "force result");
      std::vector<Vec3> forces = read_vec3_array(r);
      current_pe = r.f64();
      rec.offload_force_wall = r.f64();
      if (r.u32() != 0) throw ProtocolDesyncError("unexpected ids in sync-debug force result");
      r.expect_done();
      if (forces.size() != atoms.n_local) {
        throw ProtocolDesyncError("force result carries " + std::to_string(forces.size()) +
                                  " entries for " + std::to_string(atoms.n_local) +
                                  " owned atoms at iteration " + std::to_string(t));
      }
      atoms.f = std::move(forces);
      rec.t_comm = (e1 - e0) + (b1 - b0);
      rec.t_neigh = n1 - b1;
      rec.t_wait = w1 - w0;
      rec.list_version = list_version;
      result.calls.rebuild_comm.push_back(rec.t_comm);
      result.calls.neigh.push_back(rec.t_neigh);
    }

    final_integrate(atoms, params);

    // Step 7: ship the fresh list/map for the next engagement.  In the async
    // arm this rides behind the force result on purpose — the offload only
    // needs it by the *next* rebuild.
    if (async && rec.rebuild) {
      ep.send(offload_rank, Tag::nlist, make_list_map_msg(t, atoms, list, map));
    }

    const bool sampled = (t % si == 0) || t == T;
    reduce.iteration_done(t, atoms, current_pe, sampled);

    const double t_end = wall_seconds();
    rec.t_other = (t_end - t_begin) - rec.t_comm - rec.t_neigh - rec.t_force - rec.t_wait;
    result.ledger.push_back(std::move(rec));
  }
  result.timing.t_total = wall_seconds() - loop_start;

  for (const auto& rec : result.ledger) {
    result.timing.t_force += rec.t_force;
    result.timing.t_neigh += rec.t_neigh;
    result.timing.t_comm += rec.t_comm;
    result.timing.t_wait += rec.t_wait;
  }
  result.timing.t_other = result.timing.t_total - result.timing.t_force -
                          result.timing.t_neigh - result.timing.t_comm - result.timing.t_wait;

  if (setup.collect_final_state) {
    if (!atoms.tracks_ids()) {
      throw ConfigError("final-state collection requires id tracking");
    }
    WireWriter w;
    msg_header(w, MsgKind::rows, T);
    w.u64(atoms.n_local);
    for (std::uint64_t i = 0; i < atoms.n_local; ++i) {
      w.u64(atoms.gid[i]);
      w.vec3(wrap_periodic(atoms.x[i], d.box));
      w.vec3(atoms.v[i]);
    }
    if (node == 0) {
      auto& snap = result.final_state;
      snap.box_length = d.box.length;
      snap.iteration = T;
      auto take_rows = [&](const std::vector<std::uint8_t>& payload) {
        WireReader r(payload);
        expect_msg(r, MsgKind::rows, T, "final-state gather");
        const std::uint64_t n = r.u64();
        for (std::uint64_t k = 0; k < n; ++k) {
          SnapshotData::Row row;
          row.id = r.u64();
          row.x = r.vec3();
          row.v = r.vec3();
          snap.rows.push_back(row);
        }
        r.expect_done();
      };
      take_rows(w.take());
      for (int peer = 1; peer < P; ++peer) {
        Message m = ep.recv(peer, Tag::control, timeout);
        take_rows(m.payload);
      }
      std::sort(snap.rows.begin(), snap.rows.end(),
                [](const SnapshotData::Row& a, const SnapshotData::Row& b) { return a.id < b.id; });
    } else {
      ep.send(0, Tag::control, w.take());
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Offload worker.

void offload_worker_loop(const SimParams& params, const RunSetup& setup, Endpoint& ep,
                         int node) {
  const int P = setup.n_nodes;
  const int host_rank = node;
  const double timeout = setup.timeout_s;
  ThreadPool pool(setup.offload_threads);
  const Throttle throttle(setup.offload_throttle);
  const bool async = setup.mode == RunMode::offpath;

  OffloadEpoch epoch;
  if (async) {
    // The initial epoch arrives right after host setup; later epochs arrive
    // after each rebuild's final_integrate (step 7).
    Message m = ep.recv(host_rank, Tag::nlist, timeout);
    epoch = read_list_map(m.payload, 0, "offload setup");
  }

  const auto T = static_cast<std::uint64_t>(params.n_iterations);
  const auto interval = static_cast<std::uint64_t>(params.reneigh_interval);

  for (std::uint64_t t = interval; t <= T; t += interval) {
    if (!async) {
      Message m = ep.recv(host_rank, Tag::nlist, timeout);
      epoch = read_list_map(m.payload, t, "offload epoch");
    }
    AtomStore& atoms = epoch.atoms;

    {
      Message m = ep.recv(host_rank, Tag::x_snapshot, timeout);
      WireReader r(m.payload);
      expect_msg(r, MsgKind::snapshot, t, "offload snapshot");
      const std::uint64_t n = r.u64();
      if (n != atoms.n_local) {
        throw ProtocolDesyncError("snapshot carries " + std::to_string(n) + " atoms, epoch has " +
                                  std::to_string(atoms.n_local));
      }
      for (std::uint64_t i = 0; i < n; ++i) atoms.x[i] = r.vec3();
      r.expect_done();
    }

    // Ghost refresh among the offload workers themselves (ranks P..2P-1).
    communicate(atoms, epoch.map, ep, P, t, timeout);

    const double f0 = wall_seconds();
    const ForceResult fr = force_compute(atoms, epoch.list, params, pool);
    throttle.pay(fr.kernel_cpu);
    const double force_wall = wall_seconds() - f0;

    if (async) {
      Message m = ep.recv(host_rank, Tag::plan, timeout);
      WireReader r(m.payload);
      expect_msg(r, MsgKind::plan_perm, t, "offload plan");
      const ExchangePlan plan = read_plan(r);
      const bool sorted = r.u32() != 0;
      PermutationRecord perm;
      if (sorted) perm = read_perm(r);
      r.expect_done();

      std::vector<Vec3> forces(atoms.f.begin(), atoms.f.begin() + atoms.n_local);
      std::vector<std::uint64_t> ids = atoms.gid;
      const bool track = !ids.empty();
      forces = replay_exchange(std::move(forces), plan, ep, P, t, timeout,
                               track ? &ids : nullptr);
      if (sorted) {
        forces = apply_permutation(forces, perm);
        if (track) ids = apply_permutation(ids, perm);
      }
      ep.send(host_rank, Tag::f_result,
              make_f_result_msg(t, forces, fr.potential, force_wall, track ? &ids : nullptr));

      Message next = ep.recv(host_rank, Tag::nlist, timeout);
      epoch = read_list_map(next.payload, t, "offload epoch");
    } else {
      std::vector<Vec3> forces(atoms.f.begin(), atoms.f.begin() + atoms.n_local);
      ep.send(host_rank, Tag::f_result,
              make_f_result_msg(t, forces, fr.potential, force_wall, nullptr));
    }
  }
}

// ---------------------------------------------------------------------------
// Mesh orchestration.

namespace {

void validate_setup(const SimParams& params, const RunSetup& setup) {
  params.validate();
  if (setup.n_nodes < 1) throw ConfigError("need at least one worker node");
  if (setup.host_threads < 1 || setup.offload_threads < 1) {
    throw ConfigError("thread counts must be >= 1");
  }
  if (setup.sample_interval < 1) throw ConfigError("sample interval must be >= 1");
  if (!(setup.offload_throttle >= 1.0) || !(setup.host_throttle >= 1.0)) {
    throw ConfigError("throttle factors must be >= 1");
  }
  if (setup.collect_final_state && !setup.track_ids) {
    throw ConfigError("final-state collection requires id tracking");
  }
}

}  // namespace

SimulationResult run_simulation(const SimParams& params, const RunSetup& setup) {
  validate_setup(params, setup);
  const int P = setup.n_nodes;
  const int W = setup.mode == RunMode::baseline ? P : 2 * P;

  // Decomposition errors should surface before any thread spawns.
  create_decomposition(params, P, 0);

  std::unique_ptr<InprocFabric> fabric;
  std::vector<std::unique_ptr<Endpoint>> socket_eps;
  if (setup.socket_transport) {
    socket_eps = SocketFabric::local_mesh(W);
  } else {
    fabric = std::make_unique<InprocFabric>(W);
  }
  auto endpoint = [&](int w) -> Endpoint& {
    return setup.socket_transport ? *socket_eps[w] : fabric->endpoint(w);
  };

  SimulationResult result;
  std::vector<std::exception_ptr> errors(W);
  std::atomic<int> first_error{-1};
  std::vector<std::thread> threads;
  threads.reserve(W);
  for (int w = 0; w < W; ++w) {
    threads.emplace_back([&, w] {
      Endpoint& ep = endpoint(w);
      try {
        if (w < P) {
          SimulationResult r = host_worker_main(params, setup, ep, w);
          if (w == 0) result = std::move(r);
        } else {
          offload_worker_loop(params, setup, ep, w - P);
        }
      } catch (...) {
        errors[w] = std::current_exception();
        int expect = -1;
        first_error.compare_exchange_strong(expect, w);
        ep.poison();
      }
    });
  }
  for (auto& th : threads) th.join();

  const int failed = first_error.load();
  if (failed >= 0) std::rethrow_exception(errors[failed]);
  return result;
}

SimulationResult run_baseline(const SimParams& params, RunSetup setup) {
  setup.mode = RunMode::baseline;
  return run_simulation(params, setup);
}

SimulationResult run_offpath(const SimParams& params, RunSetup setup, bool sync_debug) {
  setup.mode = sync_debug ? RunMode::offpath_sync_debug : RunMode::offpath;
  return run_simulation(params, setup);
}

}  // namespace offmd
