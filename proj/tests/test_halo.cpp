#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <thread>
#include <vector>

#include "doctest.h"
#include "offmd/halo.hpp"
#include "offmd/lattice.hpp"
#include "offmd/neighbor.hpp"
#include "offmd/protocol.hpp"
#include "offmd/transport.hpp"
#include "offmd/wire.hpp"
#include "oracles.hpp"

using namespace offmd;

namespace {

// Drive one body per worker over an in-process mesh; first failure wins.
void with_workers(int n, const std::function<void(Endpoint&, int)>& body) {
  InprocFabric fabric(n);
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> threads;
  for (int w = 0; w < n; ++w) {
    threads.emplace_back([&, w] {
      try {
        body(fabric.endpoint(w), w);
      } catch (...) {
        errors[w] = std::current_exception();
        fabric.endpoint(w).poison();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

Vec3 value_of_gid(std::uint64_t g) {
  return Vec3{static_cast<double>(g), 0.5 * static_cast<double>(g),
              -static_cast<double>(g)};
}

}  // namespace

TEST_CASE("exchange re-homes migrated atoms and preserves the global multiset") {
  SimParams p;
  p.unit_cells = {6, 6, 6};
  p.rng_seed = 2024;
  const int P = 2;

  // Global (gid -> x, v) before and after, gathered across workers.
  std::map<std::uint64_t, std::pair<Vec3, Vec3>> before, after;
  std::mutex mu;

  with_workers(P, [&](Endpoint& ep, int w) {
    const Decomposition d = create_decomposition(p, P, w);
    AtomStore atoms = create_lattice(p, d, true);

    // Push atoms around: many cross the split plane, some wrap the box.
    for (std::uint64_t i = 0; i < atoms.n_local; ++i) {
      atoms.x[i] += 0.4 * atoms.v[i];
    }
    {
      std::lock_guard<std::mutex> lock(mu);
      for (std::uint64_t i = 0; i < atoms.n_local; ++i) {
        before[atoms.gid[i]] = {wrap_periodic(atoms.x[i], d.box), atoms.v[i]};
      }
    }

    const ExchangePlan plan = exchange(atoms, d, ep, 1, 20.0);
    CHECK(plan.n_before >= plan.axes[0].departures.size());

    // Every surviving atom is inside my slab; none kept a foreign position.
    for (std::uint64_t i = 0; i < atoms.n_local; ++i) {
      CHECK(d.owns(atoms.x[i]));
    }
    {
      std::lock_guard<std::mutex> lock(mu);
      for (std::uint64_t i = 0; i < atoms.n_local; ++i) {
        after[atoms.gid[i]] = {atoms.x[i], atoms.v[i]};
      }
    }
  });

  REQUIRE(before.size() == p.total_atoms());
  REQUIRE(after.size() == p.total_atoms());
  for (const auto& [g, xv] : before) {
    const auto it = after.find(g);
    REQUIRE(it != after.end());
    CHECK(it->second.first == xv.first);  // wrap is bitwise the same both ways
    CHECK(it->second.second == xv.second);
  }
}

TEST_CASE("exchange is a no-op when nothing moved") {
  SimParams p;
  p.unit_cells = {6, 6, 6};
  with_workers(2, [&](Endpoint& ep, int w) {
    const Decomposition d = create_decomposition(p, 2, w);
    AtomStore atoms = create_lattice(p, d, true);
    const std::vector<Vec3> x0 = atoms.x;
    const ExchangePlan plan = exchange(atoms, d, ep, 1, 20.0);
    CHECK(plan.is_identity());
    CHECK(plan.n_before == plan.n_after);
    CHECK(atoms.x == x0);
  });
}

TEST_CASE("exchange flags an atom that skipped over a whole subdomain") {
  SimParams p;
  p.unit_cells = {16, 4, 4};  // elongated: 4 slabs along x
  const int P = 4;
  try {
    with_workers(P, [&](Endpoint& ep, int w) {
      const Decomposition d = create_decomposition(p, P, w);
      REQUIRE(d.proc_grid == std::array<int, 3>{4, 1, 1});
      AtomStore atoms = create_lattice(p, d, true);
      if (w == 0) {
        // Teleport one atom two slabs away — farther than any legal step.
        atoms.x[0].x = d.box.length.x * 0.625;
      }
      exchange(atoms, d, ep, 1, 20.0);
    });
    FAIL("exchange should have flagged the teleported atom");
  } catch (const NumericalBlowupError& e) {
    CHECK(std::string(e.what()).find("farther than one subdomain") != std::string::npos);
  }
}

TEST_CASE("replay_exchange reproduces the host's slot order on a mirror worker") {
  SimParams p;
  p.unit_cells = {6, 6, 6};
  p.rng_seed = 5150;
  const int P = 2;

  with_workers(2 * P, [&](Endpoint& ep, int w) {
    if (w < P) {
      // Host: move atoms, exchange, ship plan + expectations to the mirror.
      const Decomposition d = create_decomposition(p, P, w);
      AtomStore atoms = create_lattice(p, d, true);
      for (std::uint64_t i = 0; i < atoms.n_local; ++i) {
        atoms.x[i] += 0.4 * atoms.v[i];
      }

      WireWriter pre;
      pre.u64(atoms.n_local);
      for (std::uint64_t i = 0; i < atoms.n_local; ++i) pre.u64(atoms.gid[i]);
      ep.send(P + w, Tag::control, pre.take());

      const ExchangePlan plan = exchange(atoms, d, ep, 1, 20.0);

      WireWriter pw;
      write_plan(pw, plan);
      ep.send(P + w, Tag::plan, pw.take());

      // Mirror reports its replayed (ids, values); both must line up with my
      // post-exchange identity.
      const Message m = ep.recv(P + w, Tag::f_result, 20.0);
      WireReader r(m.payload);
      const std::uint64_t n = r.u64();
      REQUIRE(n == atoms.n_local);
      for (std::uint64_t i = 0; i < n; ++i) {
        const std::uint64_t id = r.u64();
        const Vec3 val = r.vec3();
        CHECK(id == atoms.gid[i]);
        CHECK(val == value_of_gid(atoms.gid[i]));
      }
      r.expect_done();
    } else {
      // Mirror: knows only the pre-exchange identity list and the plan.
      const Message pre = ep.recv(w - P, Tag::control, 20.0);
      WireReader r(pre.payload);
      const std::uint64_t n = r.u64();
      std::vector<std::uint64_t> ids(n);
      std::vector<Vec3> values(n);
      for (std::uint64_t i = 0; i < n; ++i) {
        ids[i] = r.u64();
        values[i] = value_of_gid(ids[i]);
      }
      r.expect_done();

      const Message pm = ep.recv(w - P, Tag::plan, 20.0);
      WireReader pr(pm.payload);
      const ExchangePlan plan = read_plan(pr);
      pr.expect_done();

      values = replay_exchange(std::move(values), plan, ep, P, 1, 20.0, &ids);
      REQUIRE(values.size() == ids.size());

      WireWriter out;
      out.u64(values.size());
      for (std::uint64_t i = 0; i < values.size(); ++i) {
        out.u64(ids[i]);
        out.vec3(values[i]);
      }
      ep.send(w - P, Tag::f_result, out.take());
    }
  });
}

TEST_CASE("replay_exchange validates the value array length") {
  // A plan recorded against n atoms must reject a different-sized array.
  SimParams p;
  p.unit_cells = {6, 6, 6};
  with_workers(2, [&](Endpoint& ep, int w) {
    const Decomposition d = create_decomposition(p, 2, w);
    AtomStore atoms = create_lattice(p, d, true);
    const ExchangePlan plan = exchange(atoms, d, ep, 1, 20.0);  // identity plan
    std::vector<Vec3> wrong(atoms.n_local + 3);
    CHECK_THROWS_AS(replay_exchange(std::move(wrong), plan, ep, 0, 2, 20.0),
                    ProtocolDesyncError);
    // Identity replays exchange no batches, so no cleanup needed.
  });
}

TEST_CASE("distributed neighbor lists match the global all-pairs oracle") {
  SimParams p;
  p.unit_cells = {6, 6, 6};

  // Global per-atom oracle from the single-array lattice (bitwise the same
  // sites every worker generates).
  const AtomStore whole = create_lattice(p, create_decomposition(p, 1, 0), true);
  std::vector<Vec3> global_x(whole.x.begin(), whole.x.begin() + whole.n_local);
  const auto expected =
      oracle::all_pairs_neighbors(global_x, GlobalBox::from_params(p).length, p.halo_width());

  for (int P : {2, 4}) {
    CAPTURE(P);
    std::atomic<std::uint64_t> checked{0};
    with_workers(P, [&](Endpoint& ep, int w) {
      const Decomposition d = create_decomposition(p, P, w);
      AtomStore atoms = create_lattice(p, d, true);
      ThreadPool pool(1);
      exchange(atoms, d, ep, 0, 20.0);
      border(atoms, d, p, ep, 0, 20.0);
      const NeighborList list = neighbor_build(atoms, p, d, pool, 0);

      for (std::uint32_t i = 0; i < atoms.n_local; ++i) {
        std::vector<oracle::ImageRef> got;
        for (const std::uint32_t j : list.of(i)) {
          got.push_back(oracle::ImageRef{atoms.x[j], atoms.shift[j]});
        }
        std::sort(got.begin(), got.end());
        const auto& want = expected[atoms.gid[i]];
        REQUIRE(got.size() == want.size());
        CHECK(got == want);
        ++checked;
      }
    });
    CHECK(checked.load() == p.total_atoms());
  }
}

TEST_CASE("communicate refreshes self-image ghosts from their owners") {
  SimParams p;
  p.unit_cells = {4, 4, 4};
  p.rng_seed = 404;
  const Decomposition d = create_decomposition(p, 1, 0);
  InprocFabric fabric(1);
  Endpoint& ep = fabric.endpoint(0);

  AtomStore atoms = create_lattice(p, d, true);
  exchange(atoms, d, ep, 0, 20.0);
  const BorderMap map = border(atoms, d, p, ep, 0, 20.0);
  REQUIRE(atoms.n_ghost > 0);

  // Move every owned atom, then refresh.
  for (std::uint64_t i = 0; i < atoms.n_local; ++i) {
    atoms.x[i] += 0.001 * atoms.v[i];
  }
  const std::vector<Vec3> shift_before(atoms.shift.begin() + atoms.n_local, atoms.shift.end());
  communicate(atoms, map, ep, 0, 1, 20.0);

  // Each recorded recv range mirrors the matching send list, in order, with
  // raw coordinates bitwise equal to the (current) source slot.
  for (int a = 0; a < 3; ++a) {
    const auto& ax = map.axes[a];
    for (std::uint32_t k = 0; k < ax.recv_east_count; ++k) {
      CHECK(atoms.x[ax.recv_east_first + k] == atoms.x[ax.west_send_slots[k]]);
    }
    for (std::uint32_t k = 0; k < ax.recv_west_count; ++k) {
      CHECK(atoms.x[ax.recv_west_first + k] == atoms.x[ax.east_send_slots[k]]);
    }
  }

  // Shifts are part of the epoch, not the refresh.
  const std::vector<Vec3> shift_after(atoms.shift.begin() + atoms.n_local, atoms.shift.end());
  CHECK(shift_after == shift_before);
}

TEST_CASE("communicate equals a fresh border pass while membership is stable") {
  SimParams p;
  p.unit_cells = {6, 6, 6};
  p.rng_seed = 808;
  const int P = 2;
  with_workers(P, [&](Endpoint& ep, int w) {
    const Decomposition d = create_decomposition(p, P, w);
    AtomStore atoms = create_lattice(p, d, true);
    exchange(atoms, d, ep, 0, 20.0);
    const BorderMap map = border(atoms, d, p, ep, 0, 20.0);

    for (std::uint64_t i = 0; i < atoms.n_local; ++i) {
      atoms.x[i] += 0.0005 * atoms.v[i];  // too small to change face membership
    }
    AtomStore fresh = atoms;
    communicate(atoms, map, ep, 0, 1, 20.0);
    border(fresh, d, p, ep, 1, 20.0);

    REQUIRE(fresh.n_ghost == atoms.n_ghost);
    for (std::uint64_t s = atoms.n_local; s < atoms.n_total(); ++s) {
      CHECK(atoms.x[s] == fresh.x[s]);
      CHECK(atoms.shift[s] == fresh.shift[s]);
    }
  });
}

TEST_CASE("border map layout is deterministic across repeated builds") {
  SimParams p;
  p.unit_cells = {6, 6, 6};
  with_workers(2, [&](Endpoint& ep, int w) {
    const Decomposition d = create_decomposition(p, 2, w);
    AtomStore a1 = create_lattice(p, d, true);
    exchange(a1, d, ep, 0, 20.0);
    border(a1, d, p, ep, 0, 20.0);
    AtomStore a2 = create_lattice(p, d, true);
    exchange(a2, d, ep, 1, 20.0);
    border(a2, d, p, ep, 1, 20.0);
    CHECK(a1.x == a2.x);
    CHECK(a1.shift == a2.shift);
    CHECK(a1.n_ghost == a2.n_ghost);
  });
}
