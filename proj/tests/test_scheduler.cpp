#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "doctest.h"
#include "offmd/lattice.hpp"
#include "offmd/parallel.hpp"
#include "offmd/protocol.hpp"
#include "offmd/scheduler.hpp"
#include "offmd/transport.hpp"
#include "offmd/wire.hpp"

using namespace offmd;

namespace {

SimParams small_params(int t_iters, int interval) {
  SimParams p;
  p.unit_cells = {4, 4, 4};
  p.n_iterations = t_iters;
  p.reneigh_interval = interval;
  p.rng_seed = 991;
  return p;
}

// Full-resolution snapshot of the starting configuration, in gid order.
SnapshotData lattice_snapshot(const SimParams& p) {
  const AtomStore atoms = create_lattice(p, create_decomposition(p, 1, 0), true);
  SnapshotData snap;
  snap.box_length = GlobalBox::from_params(p).length;
  snap.iteration = 0;
  for (std::uint64_t i = 0; i < atoms.n_local; ++i) {
    snap.rows.push_back({atoms.gid[i], atoms.x[i], atoms.v[i]});
  }
  return snap;
}

}  // namespace

TEST_CASE("run mode names round-trip; unknown names are rejected") {
  for (RunMode m : {RunMode::baseline, RunMode::offpath, RunMode::offpath_sync_debug}) {
    CHECK(run_mode_from_string(to_string(m)) == m);
  }
  CHECK_THROWS_AS(run_mode_from_string("turbo"), ConfigError);
  CHECK_THROWS_AS(run_mode_from_string(""), ConfigError);
}

TEST_CASE("setup validation rejects broken mesh configurations") {
  const SimParams p = small_params(10, 5);
  RunSetup s;
  s.n_nodes = 0;
  CHECK_THROWS_AS(run_simulation(p, s), ConfigError);
  s = RunSetup{};
  s.host_threads = 0;
  CHECK_THROWS_AS(run_simulation(p, s), ConfigError);
  s = RunSetup{};
  s.offload_threads = -1;
  CHECK_THROWS_AS(run_simulation(p, s), ConfigError);
  s = RunSetup{};
  s.sample_interval = 0;
  CHECK_THROWS_AS(run_simulation(p, s), ConfigError);
  s = RunSetup{};
  s.offload_throttle = 0.5;
  CHECK_THROWS_AS(run_simulation(p, s), ConfigError);
  s = RunSetup{};
  s.host_throttle = 0.0;
  CHECK_THROWS_AS(run_simulation(p, s), ConfigError);
  s = RunSetup{};
  s.collect_final_state = true;
  s.track_ids = false;
  CHECK_THROWS_AS(run_simulation(p, s), ConfigError);
}

TEST_CASE("sync-debug arm is bitwise identical to baseline") {
  struct Case {
    int nodes;
    int iters;
    int interval;
    int sort_interval;
  };
  for (const Case c : {Case{1, 40, 20, 5}, Case{2, 15, 5, 1}}) {
    CAPTURE(c.nodes);
    CAPTURE(c.interval);
    SimParams p = small_params(c.iters, c.interval);
    p.sort_interval = c.sort_interval;
    RunSetup s;
    s.n_nodes = c.nodes;

    const SimulationResult base = run_baseline(p, s);
    const SimulationResult sync = run_offpath(p, s, /*sync_debug=*/true);

    REQUIRE(base.digests.size() == static_cast<std::size_t>(c.iters) + 1);
    REQUIRE(sync.digests.size() == base.digests.size());
    CHECK(sync.digests == base.digests);

    REQUIRE(sync.thermo.size() == base.thermo.size());
    for (std::size_t k = 0; k < base.thermo.size(); ++k) {
      CHECK(sync.thermo[k].iteration == base.thermo[k].iteration);
      CHECK(sync.thermo[k].temperature == base.thermo[k].temperature);
      CHECK(sync.thermo[k].potential == base.thermo[k].potential);
      CHECK(sync.thermo[k].total == base.thermo[k].total);
    }
  }
}

TEST_CASE("async arm matches baseline before the first rebuild, then diverges") {
  const SimParams p = small_params(40, 20);
  RunSetup s;
  s.n_nodes = 2;
  const SimulationResult base = run_baseline(p, s);
  const SimulationResult off = run_offpath(p, s);

  REQUIRE(off.digests.size() == 41);
  // Iterations before the first rebuild consume the same list from the same
  // state — bitwise equal.
  for (std::size_t t = 0; t < 20; ++t) {
    CAPTURE(t);
    CHECK(off.digests[t] == base.digests[t]);
  }
  // The rebuild iteration consumes the stale list; the trajectories part ways.
  CHECK(off.digests.back() != base.digests.back());
}

TEST_CASE("iteration ledger and per-call counts follow the cadence") {
  SimParams p = small_params(20, 5);
  p.sort_interval = 2;  // sort every other rebuild: iterations 10 and 20
  RunSetup s;
  s.n_nodes = 1;

  const SimulationResult base = run_baseline(p, s);
  REQUIRE(base.ledger.size() == 20);
  CHECK(base.list_builds == 5);  // setup + 4 in-loop rebuilds
  CHECK(base.calls.force.size() == 20);
  CHECK(base.calls.neigh.size() == 4);
  CHECK(base.calls.rebuild_comm.size() == 4);
  CHECK(base.calls.halo_refresh.size() == 16);
  for (const auto& rec : base.ledger) {
    CHECK(rec.rebuild == (rec.iteration % 5 == 0));
    CHECK(rec.sorted == (rec.iteration % 10 == 0));
    CHECK(rec.offload_force_wall == 0.0);
    if (rec.iteration > 1) {
      const auto& prev = base.ledger[rec.iteration - 2];
      CHECK(rec.list_version == prev.list_version + (rec.rebuild ? 1 : 0));
    }
  }

  const SimulationResult off = run_offpath(p, s);
  REQUIRE(off.ledger.size() == 20);
  CHECK(off.list_builds == 5);
  CHECK(off.calls.force.size() == 16);  // host skips rebuild-iteration forces
  CHECK(off.calls.neigh.size() == 4);
  for (const auto& rec : off.ledger) {
    if (!rec.rebuild) continue;
    CHECK(rec.offload_force_wall > 0.0);
    // Forces consumed the previous list; the fresh one starts next iteration.
    const auto& prev = off.ledger[rec.iteration - 2];
    CHECK(rec.list_version == prev.list_version);
    if (rec.iteration < 20) {
      const auto& next = off.ledger[rec.iteration];
      CHECK(next.list_version == rec.list_version + 1);
    }
  }
}

TEST_CASE("sampling cadence always includes iteration zero and the last iteration") {
  const SimParams p = small_params(25, 5);
  RunSetup s;
  s.n_nodes = 1;
  s.sample_interval = 10;
  const SimulationResult r = run_baseline(p, s);
  std::vector<std::uint64_t> its;
  for (const auto& t : r.thermo) its.push_back(t.iteration);
  CHECK(its == std::vector<std::uint64_t>{0, 10, 20, 25});
  REQUIRE(r.conservation.size() == r.thermo.size());
  for (std::size_t k = 0; k < its.size(); ++k) {
    CHECK(r.conservation[k].iteration == its[k]);
  }
}

TEST_CASE("timing breakdown components are non-negative and bounded by the total") {
  const SimParams p = small_params(20, 5);
  RunSetup s;
  s.n_nodes = 2;
  for (RunMode m : {RunMode::baseline, RunMode::offpath}) {
    s.mode = m;
    const SimulationResult r = run_simulation(p, s);
    const TimingBreakdown& b = r.timing;
    CHECK(b.t_force >= 0.0);
    CHECK(b.t_neigh >= 0.0);
    CHECK(b.t_comm >= 0.0);
    CHECK(b.t_wait >= 0.0);
    CHECK(b.t_force + b.t_neigh + b.t_comm <= b.t_total);
    const double parts = b.t_force + b.t_neigh + b.t_comm + b.t_wait + b.t_other;
    CHECK(parts <= b.t_total * (1.0 + 1e-9));
    if (m == RunMode::baseline) CHECK(b.t_wait == 0.0);
  }
}

TEST_CASE("conserved quantities hold in every mode") {
  SimParams p = small_params(60, 20);
  RunSetup s;
  s.n_nodes = 2;
  s.sample_interval = 10;
  for (RunMode m : {RunMode::baseline, RunMode::offpath, RunMode::offpath_sync_debug}) {
    CAPTURE(to_string(m));
    s.mode = m;
    const SimulationResult r = run_simulation(p, s);
    REQUIRE(!r.conservation.empty());
    for (const auto& c : r.conservation) {
      CHECK(c.n_atoms == p.total_atoms());
      CHECK(std::abs(c.momentum.x) <= 1e-10);
      CHECK(std::abs(c.momentum.y) <= 1e-10);
      CHECK(std::abs(c.momentum.z) <= 1e-10);
    }
  }
}

TEST_CASE("frequent sorting with live replay keeps identities straight") {
  // Sort on every rebuild with a short interval: every epoch exercises the
  // plan + permutation replay on the offload side.  The id checks inside the
  // scheduler turn any slot mix-up into a ProtocolDesyncError.
  SimParams p = small_params(8, 2);
  p.sort_interval = 1;
  RunSetup s;
  s.n_nodes = 2;
  const SimulationResult r = run_offpath(p, s);
  CHECK(r.ledger.size() == 8);
  CHECK(r.list_builds == 5);
  for (const auto& c : r.conservation) CHECK(c.n_atoms == p.total_atoms());
}

TEST_CASE("digests ignore id tracking") {
  const SimParams p = small_params(10, 5);
  RunSetup s;
  s.n_nodes = 2;
  SimulationResult with_ids = run_baseline(p, s);
  s.track_ids = false;
  SimulationResult without = run_baseline(p, s);
  CHECK(with_ids.digests == without.digests);
}

TEST_CASE("socket transport reproduces the in-process trajectory bitwise") {
  const SimParams p = small_params(10, 5);
  RunSetup s;
  s.n_nodes = 1;
  const SimulationResult inproc = run_offpath(p, s);
  s.socket_transport = true;
  const SimulationResult socket = run_offpath(p, s);
  CHECK(socket.digests == inproc.digests);
  REQUIRE(!socket.thermo.empty());
  CHECK(socket.thermo.back().temperature == inproc.thermo.back().temperature);
}

TEST_CASE("a run resumed from a dumped state continues bitwise") {
  // Single node, no sorting, split on a rebuild boundary: the dumped rows are
  // in gid order, which is also the live slot order, so the resumed run must
  // replay the uninterrupted trajectory exactly.
  SimParams p = small_params(20, 5);
  p.sort_interval = 0;
  RunSetup s;
  s.n_nodes = 1;
  const SimulationResult whole = run_baseline(p, s);

  p.n_iterations = 10;
  s.collect_final_state = true;
  const SimulationResult first_half = run_baseline(p, s);
  REQUIRE(first_half.final_state.rows.size() == p.total_atoms());
  CHECK(first_half.final_state.iteration == 10);

  s.collect_final_state = false;
  s.initial_state = &first_half.final_state;
  const SimulationResult second_half = run_baseline(p, s);

  REQUIRE(second_half.digests.size() == 11);
  for (std::size_t k = 0; k <= 10; ++k) {
    CAPTURE(k);
    CHECK(second_half.digests[k] == whole.digests[10 + k]);
  }
  CHECK(second_half.thermo.back().temperature == whole.thermo.back().temperature);
}

TEST_CASE("a snapshot with the wrong box is rejected") {
  const SimParams p = small_params(10, 5);
  SnapshotData snap = lattice_snapshot(p);
  snap.box_length.x *= 1.01;
  RunSetup s;
  s.n_nodes = 1;
  s.initial_state = &snap;
  CHECK_THROWS_AS(run_baseline(p, s), ConfigError);
}

TEST_CASE("overlapping atoms blow up the mesh cleanly in every worker") {
  const SimParams p = small_params(10, 5);
  SnapshotData snap = lattice_snapshot(p);
  snap.rows[1].x = snap.rows[0].x + Vec3{1e-5, 0.0, 0.0};
  RunSetup s;
  s.n_nodes = 2;
  s.mode = RunMode::offpath;
  s.timeout_s = 30.0;
  s.initial_state = &snap;
  CHECK_THROWS_AS(run_simulation(p, s), NumericalBlowupError);
}

TEST_CASE("a silent offload worker surfaces as a transport timeout, not a hang") {
  const SimParams p = small_params(3, 3);
  RunSetup s;
  s.mode = RunMode::offpath;
  s.n_nodes = 1;
  s.timeout_s = 0.05;
  InprocFabric fabric(2);  // rank 1 (the offload) never runs
  const double t0 = wall_seconds();
  CHECK_THROWS_AS(host_worker_main(p, s, fabric.endpoint(0), 0), TransportError);
  CHECK(wall_seconds() - t0 < 10.0);
}

TEST_CASE("an out-of-protocol force result is named precisely") {
  const SimParams p = small_params(1, 1);
  RunSetup s;
  s.mode = RunMode::offpath;
  s.n_nodes = 1;
  s.timeout_s = 5.0;
  InprocFabric fabric(2);

  // Right tag, wrong payload kind, queued up front (sends are buffered): the
  // host must diagnose the mismatch instead of misreading the bytes.
  {
    WireWriter w;
    msg_header(w, MsgKind::thermo, 1);
    fabric.endpoint(1).send(0, Tag::f_result, w.take());
  }
  try {
    host_worker_main(p, s, fabric.endpoint(0), 0);
    FAIL("host accepted a thermo payload as a force result");
  } catch (const ProtocolDesyncError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("expected f_result") != std::string::npos);
    CHECK(msg.find("thermo") != std::string::npos);
  }
}
