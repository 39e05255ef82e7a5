#include "offmd/halo.hpp"

#include <string>

#include "offmd/wire.hpp"

namespace offmd {
namespace {

// Batch payload kinds; every halo message starts with (kind, iteration,
// axis/dir) so a protocol that slips out of step fails loudly with exact
// expected-vs-got diagnostics instead of misinterpreting bytes.
constexpr std::uint32_t kExchangeBatch = 0xE0;
constexpr std::uint32_t kBorderBatch = 0xB0;
constexpr std::uint32_t kCommBatch = 0xC0;

// Exchange batch entry formats.
constexpr std::uint32_t kFmtValues = 0;     // one vec3 per entry (replay)
constexpr std::uint32_t kFmtAtoms = 1;      // x, v
constexpr std::uint32_t kFmtAtomsIds = 2;   // x, v, gid
constexpr std::uint32_t kFmtValuesIds = 3;  // vec3, gid (replay with identity check)

void put_header(WireWriter& w, std::uint32_t kind, std::uint64_t iteration, std::uint32_t axis,
                std::uint32_t dir) {
  w.u32(kind);
  w.u64(iteration);
  w.u32((axis << 1) | dir);
}

void check_header(WireReader& r, std::uint32_t kind, std::uint64_t iteration, std::uint32_t axis,
                  std::uint32_t dir, const char* what) {
  const std::uint32_t got_kind = r.u32();
  const std::uint64_t got_iter = r.u64();
  const std::uint32_t got_ad = r.u32();
  const std::uint32_t want_ad = (axis << 1) | dir;
  if (got_kind != kind || got_iter != iteration || got_ad != want_ad) {
    throw ProtocolDesyncError(std::string(what) + ": expected kind=" + std::to_string(kind) +
                              " iteration=" + std::to_string(iteration) + " axis/dir=" +
                              std::to_string(want_ad) + ", got kind=" + std::to_string(got_kind) +
                              " iteration=" + std::to_string(got_iter) + " axis/dir=" +
                              std::to_string(got_ad));
  }
}

}  // namespace

ExchangePlan exchange(AtomStore& atoms, const Decomposition& d, Endpoint& ep,
                      std::uint64_t iteration, double timeout_s) {
  atoms.clear_ghosts();
  for (std::uint64_t i = 0; i < atoms.n_local; ++i) {
    atoms.x[i] = wrap_periodic(atoms.x[i], d.box);
  }
  const bool ids = atoms.tracks_ids();
  const std::uint32_t fmt = ids ? kFmtAtomsIds : kFmtAtoms;

  ExchangePlan plan;
  plan.n_before = static_cast<std::uint32_t>(atoms.n_local);

  for (int a = 0; a < 3; ++a) {
    auto& pass = plan.axes[a];
    const int pg = d.proc_grid[a];
    pass.west_node = static_cast<std::uint32_t>(d.neighbor(a, -1));
    pass.east_node = static_cast<std::uint32_t>(d.neighbor(a, +1));
    pass.mode = pg == 1 ? PassMode::none : (pg == 2 ? PassMode::single : PassMode::dual);
    if (pass.mode == PassMode::none) continue;  // slab spans the axis; wrap handled it

    const double lo = d.sub_lo[a];
    const double hi = d.sub_hi[a];
    const double L = d.box.length[a];
    auto bound = [&](int i) { return i == pg ? L : L * i / pg; };
    const int c = d.my_coords[a];
    const int wc = (c - 1 + pg) % pg;
    const int ec = (c + 1) % pg;

    // Departure scan.  remove_owned_swap_last moves the tail atom into the
    // hole, so a removed slot is re-examined, never skipped.
    WireWriter w;
    put_header(w, kExchangeBatch, iteration, static_cast<std::uint32_t>(a), 0);
    WireWriter body;
    std::uint32_t n_depart = 0;
    for (std::uint64_t i = 0; i < atoms.n_local;) {
      const double pos = atoms.x[i][a];
      if (pos < lo || pos >= hi) {
        const bool fits_west = pos >= bound(wc) && pos < bound(wc + 1);
        const bool fits_east = pos >= bound(ec) && pos < bound(ec + 1);
        if (!fits_west && !fits_east) {
          throw NumericalBlowupError(
              "atom moved farther than one subdomain on axis " + std::to_string(a) +
              " (coordinate " + std::to_string(pos) +
              "); skin or re-neighbor interval misconfigured");
        }
        body.vec3(atoms.x[i]);
        body.vec3(atoms.v[i]);
        if (ids) body.u64(atoms.gid[i]);
        pass.departures.push_back(static_cast<std::uint32_t>(i));
        atoms.remove_owned_swap_last(i);
        ++n_depart;
      } else {
        ++i;
      }
    }
    w.u32(n_depart);
    w.u32(fmt);
    {
      auto b = body.take();
      w.bytes(b.data(), b.size());
    }
    const auto payload = w.take();

    // A departing atom fits an adjacent slab in wrapped coordinates, so
    // sending the batch to both axis neighbors and letting each keep what
    // falls in its slab routes every migration in one hop — including the
    // periodic wrap case, where the wrapped coordinate lands at the far end.
    if (pass.mode == PassMode::single) {
      ep.send(static_cast<int>(pass.west_node), Tag::exchange, payload);
    } else {
      ep.send(static_cast<int>(pass.west_node), Tag::exchange, payload);
      ep.send(static_cast<int>(pass.east_node), Tag::exchange, payload);
    }

    auto process_incoming = [&](std::uint32_t peer, std::vector<std::uint32_t>& accepts,
                                std::uint32_t& len_field) {
      Message m = ep.recv(static_cast<int>(peer), Tag::exchange, timeout_s);
      WireReader r(m.payload);
      check_header(r, kExchangeBatch, iteration, static_cast<std::uint32_t>(a), 0, "exchange");
      const std::uint32_t n = r.u32();
      const std::uint32_t got_fmt = r.u32();
      if (got_fmt != fmt) {
        throw ProtocolDesyncError("exchange batch format " + std::to_string(got_fmt) +
                                  " from worker " + std::to_string(peer) + ", expected " +
                                  std::to_string(fmt));
      }
      len_field = n;
      for (std::uint32_t k = 0; k < n; ++k) {
        const Vec3 x = r.vec3();
        const Vec3 v = r.vec3();
        const std::uint64_t g = ids ? r.u64() : 0;
        if (x[a] >= lo && x[a] < hi) {
          atoms.push_owned(x, v, g, ids);
          accepts.push_back(k);
        }
      }
      r.expect_done();
    };

    if (pass.mode == PassMode::single) {
      process_incoming(pass.west_node, pass.accept_east, pass.batch_len_east);
    } else {
      process_incoming(pass.east_node, pass.accept_east, pass.batch_len_east);
      process_incoming(pass.west_node, pass.accept_west, pass.batch_len_west);
    }
  }

  plan.n_after = static_cast<std::uint32_t>(atoms.n_local);
  return plan;
}

std::vector<Vec3> replay_exchange(std::vector<Vec3> values, const ExchangePlan& plan,
                                  Endpoint& ep, int rank_offset, std::uint64_t iteration,
                                  double timeout_s, std::vector<std::uint64_t>* ids) {
  if (values.size() != plan.n_before) {
    throw ProtocolDesyncError("replay_exchange: " + std::to_string(values.size()) +
                              " values but plan recorded n_before=" +
                              std::to_string(plan.n_before));
  }
  if (ids && ids->size() != values.size()) {
    throw ProtocolDesyncError("replay_exchange: " + std::to_string(ids->size()) +
                              " ids for " + std::to_string(values.size()) + " values");
  }
  const std::uint32_t fmt = ids ? kFmtValuesIds : kFmtValues;

  for (int a = 0; a < 3; ++a) {
    const auto& pass = plan.axes[a];
    if (pass.mode == PassMode::none) continue;

    WireWriter w;
    put_header(w, kExchangeBatch, iteration, static_cast<std::uint32_t>(a), 0);
    w.u32(static_cast<std::uint32_t>(pass.departures.size()));
    w.u32(fmt);
    for (const std::uint32_t slot : pass.departures) {
      if (slot >= values.size()) {
        throw ProtocolDesyncError("replay_exchange: departure slot " + std::to_string(slot) +
                                  " out of range " + std::to_string(values.size()));
      }
      w.vec3(values[slot]);
      values[slot] = values.back();
      values.pop_back();
      if (ids) {
        w.u64((*ids)[slot]);
        (*ids)[slot] = ids->back();
        ids->pop_back();
      }
    }
    const auto payload = w.take();

    if (pass.mode == PassMode::single) {
      ep.send(static_cast<int>(pass.west_node) + rank_offset, Tag::exchange, payload);
    } else {
      ep.send(static_cast<int>(pass.west_node) + rank_offset, Tag::exchange, payload);
      ep.send(static_cast<int>(pass.east_node) + rank_offset, Tag::exchange, payload);
    }

    auto process_incoming = [&](std::uint32_t peer, const std::vector<std::uint32_t>& accepts,
                                std::uint32_t expect_len) {
      Message m = ep.recv(static_cast<int>(peer) + rank_offset, Tag::exchange, timeout_s);
      WireReader r(m.payload);
      check_header(r, kExchangeBatch, iteration, static_cast<std::uint32_t>(a), 0,
                   "replay_exchange");
      const std::uint32_t n = r.u32();
      const std::uint32_t got_fmt = r.u32();
      if (got_fmt != fmt || n != expect_len) {
        throw ProtocolDesyncError("replay_exchange: batch (len " + std::to_string(n) +
                                  ", fmt " + std::to_string(got_fmt) + ") from worker " +
                                  std::to_string(peer) + " does not match plan (len " +
                                  std::to_string(expect_len) + ", fmt " + std::to_string(fmt) +
                                  ")");
      }
      std::vector<Vec3> batch(n);
      std::vector<std::uint64_t> batch_ids(ids ? n : 0);
      for (std::uint32_t k = 0; k < n; ++k) {
        batch[k] = r.vec3();
        if (ids) batch_ids[k] = r.u64();
      }
      r.expect_done();
      for (const std::uint32_t idx : accepts) {
        if (idx >= n) {
          throw ProtocolDesyncError("replay_exchange: accept index " + std::to_string(idx) +
                                    " out of batch length " + std::to_string(n));
        }
        values.push_back(batch[idx]);
        if (ids) ids->push_back(batch_ids[idx]);
      }
    };

    if (pass.mode == PassMode::single) {
      process_incoming(pass.west_node, pass.accept_east, pass.batch_len_east);
    } else {
      process_incoming(pass.east_node, pass.accept_east, pass.batch_len_east);
      process_incoming(pass.west_node, pass.accept_west, pass.batch_len_west);
    }
  }

  if (values.size() != plan.n_after) {
    throw ProtocolDesyncError("replay_exchange: ended with " + std::to_string(values.size()) +
                              " values, plan recorded n_after=" + std::to_string(plan.n_after));
  }
  return values;
}

BorderMap border(AtomStore& atoms, const Decomposition& d, const SimParams& params,
                 Endpoint& ep, std::uint64_t iteration, double timeout_s) {
  (void)params;  // halo width was folded into the decomposition
  atoms.clear_ghosts();

  BorderMap map;
  map.n_local_at_build = static_cast<std::uint32_t>(atoms.n_local);
  const double halo = d.halo_width;

  for (int a = 0; a < 3; ++a) {
    auto& ax = map.axes[a];
    const int pg = d.proc_grid[a];
    const int c = d.my_coords[a];
    ax.west_node = static_cast<std::uint32_t>(d.neighbor(a, -1));
    ax.east_node = static_cast<std::uint32_t>(d.neighbor(a, +1));
    if (c == 0) ax.west_pack_shift[a] = d.box.length[a];
    if (c == pg - 1) ax.east_pack_shift[a] = -d.box.length[a];

    const double wlim = d.sub_lo[a] + halo;
    const double elim = d.sub_hi[a] - halo;
    // Ghosts appended by earlier axes are scanned too: that forwarding is
    // what populates edge and corner halo regions.
    const std::uint64_t scan_end = atoms.n_total();
    for (std::uint64_t s = 0; s < scan_end; ++s) {
      const double sp = atoms.x[s][a] + atoms.shift[s][a];
      if (sp <= wlim) ax.west_send_slots.push_back(static_cast<std::uint32_t>(s));
      if (sp >= elim) ax.east_send_slots.push_back(static_cast<std::uint32_t>(s));
    }

    auto make_batch = [&](const std::vector<std::uint32_t>& slots, const Vec3& pack_shift,
                          std::uint32_t dir) {
      WireWriter w;
      put_header(w, kBorderBatch, iteration, static_cast<std::uint32_t>(a), dir);
      w.u32(static_cast<std::uint32_t>(slots.size()));
      for (const std::uint32_t s : slots) {
        w.vec3(atoms.x[s]);                    // raw owner coordinate, forwarded unchanged
        w.vec3(atoms.shift[s] + pack_shift);   // shift accumulates exactly (+-L per axis)
      }
      return w.take();
    };
    ep.send(static_cast<int>(ax.west_node), Tag::border,
            make_batch(ax.west_send_slots, ax.west_pack_shift, 0));
    ep.send(static_cast<int>(ax.east_node), Tag::border,
            make_batch(ax.east_send_slots, ax.east_pack_shift, 1));

    auto recv_batch = [&](std::uint32_t peer, std::uint32_t dir, std::uint32_t& first,
                          std::uint32_t& count) {
      Message m = ep.recv(static_cast<int>(peer), Tag::border, timeout_s);
      WireReader r(m.payload);
      check_header(r, kBorderBatch, iteration, static_cast<std::uint32_t>(a), dir, "border");
      const std::uint32_t n = r.u32();
      const std::uint64_t f = atoms.append_ghost_slots(n);
      for (std::uint32_t k = 0; k < n; ++k) {
        atoms.x[f + k] = r.vec3();
        atoms.shift[f + k] = r.vec3();
      }
      r.expect_done();
      first = static_cast<std::uint32_t>(f);
      count = n;
    };
    // The east peer's west-going batch lands beyond my east face, and vice
    // versa.  Receive east first: fixed arrival order keeps ghost slot
    // layout deterministic and FIFO-aligned even when both peers coincide.
    recv_batch(ax.east_node, 0, ax.recv_east_first, ax.recv_east_count);
    recv_batch(ax.west_node, 1, ax.recv_west_first, ax.recv_west_count);
  }

  map.n_ghost_total = atoms.n_ghost;
  return map;
}

void communicate(AtomStore& atoms, const BorderMap& map, Endpoint& ep, int rank_offset,
                 std::uint64_t iteration, double timeout_s) {
  if (atoms.n_local != map.n_local_at_build || atoms.n_ghost != map.n_ghost_total) {
    throw ProtocolDesyncError(
        "communicate: store has " + std::to_string(atoms.n_local) + "+" +
        std::to_string(atoms.n_ghost) + " slots, border map recorded " +
        std::to_string(map.n_local_at_build) + "+" + std::to_string(map.n_ghost_total));
  }

  for (int a = 0; a < 3; ++a) {
    const auto& ax = map.axes[a];
    auto make_batch = [&](const std::vector<std::uint32_t>& slots, std::uint32_t dir) {
      WireWriter w;
      put_header(w, kCommBatch, iteration, static_cast<std::uint32_t>(a), dir);
      w.u32(static_cast<std::uint32_t>(slots.size()));
      for (const std::uint32_t s : slots) w.vec3(atoms.x[s]);
      return w.take();
    };
    ep.send(static_cast<int>(ax.west_node) + rank_offset, Tag::communicate,
            make_batch(ax.west_send_slots, 0));
    ep.send(static_cast<int>(ax.east_node) + rank_offset, Tag::communicate,
            make_batch(ax.east_send_slots, 1));

    auto recv_batch = [&](std::uint32_t peer, std::uint32_t dir, std::uint32_t first,
                          std::uint32_t count) {
      Message m = ep.recv(static_cast<int>(peer) + rank_offset, Tag::communicate, timeout_s);
      WireReader r(m.payload);
      check_header(r, kCommBatch, iteration, static_cast<std::uint32_t>(a), dir, "communicate");
      const std::uint32_t n = r.u32();
      if (n != count) {
        throw ProtocolDesyncError("communicate: batch of " + std::to_string(n) +
                                  " from worker " + std::to_string(peer) +
                                  ", border map expects " + std::to_string(count));
      }
      for (std::uint32_t k = 0; k < n; ++k) atoms.x[first + k] = r.vec3();
      r.expect_done();
    };
    // Receive in the same fixed order border used; later axes may forward
    // coordinates refreshed here, so each axis completes before the next.
    recv_batch(ax.east_node, 0, ax.recv_east_first, ax.recv_east_count);
    recv_batch(ax.west_node, 1, ax.recv_west_first, ax.recv_west_count);
  }
}

}  // namespace offmd
