#ifndef OFFMD_HALO_HPP
#define OFFMD_HALO_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "offmd/atom_store.hpp"
#include "offmd/decomposition.hpp"
#include "offmd/params.hpp"
#include "offmd/transport.hpp"

namespace offmd {

// How an axis talks to its neighbors during exchange.
enum class PassMode : std::uint32_t {
  none = 0,    // axis has one worker: nothing can depart
  single = 1,  // two workers: one peer covers both directions, send once
  dual = 2,    // send the departure batch west and east; receivers filter
};

// Replayable record of one exchange: per axis, the departure ops (slot plus
// the implicit fill-with-last compaction), the expected incoming batch
// lengths, and the accept masks saying which batch entries were appended, in
// order.  Replaying these ops on any equal-length value array — migrating
// entries across the mirror-topology transport — reproduces the host's
// post-exchange slot order exactly, with no re-derivation from geometry.
struct ExchangePlan {
  struct AxisPass {
    PassMode mode = PassMode::none;
    std::uint32_t west_node = 0;
    std::uint32_t east_node = 0;
    // Departure slots in removal order; each removal moves the last owned
    // entry into the hole (record replays as: emit value, fill from last).
    std::vector<std::uint32_t> departures;
    // Indices into the received batches that were accepted, in append order.
    // `single` mode uses only the east list (one batch arrives).
    std::vector<std::uint32_t> accept_east;
    std::vector<std::uint32_t> accept_west;
    std::uint32_t batch_len_east = 0;  // expected incoming lengths, for validation
    std::uint32_t batch_len_west = 0;
  };
  std::array<AxisPass, 3> axes;
  std::uint32_t n_before = 0;
  std::uint32_t n_after = 0;

  bool is_identity() const {
    for (const auto& a : axes) {
      if (!a.departures.empty() || !a.accept_east.empty() || !a.accept_west.empty())
        return false;
    }
    return true;
  }
};

// Ghost bookkeeping for one rebuild epoch: which owned (or forwarded) slots
// each face sends, what shift the receiver's frame adds, and where each
// incoming batch landed in the ghost region.  communicate() replays exactly
// this layout every iteration until the next rebuild.
struct BorderMap {
  struct Axis {
    std::uint32_t west_node = 0;
    std::uint32_t east_node = 0;
    Vec3 west_pack_shift;  // added to a slot's stored shift when sending west
    Vec3 east_pack_shift;
    std::vector<std::uint32_t> west_send_slots;
    std::vector<std::uint32_t> east_send_slots;
    std::uint32_t recv_east_first = 0;  // ghosts arriving from the east peer
    std::uint32_t recv_east_count = 0;
    std::uint32_t recv_west_first = 0;
    std::uint32_t recv_west_count = 0;
  };
  std::array<Axis, 3> axes;
  std::uint32_t n_local_at_build = 0;
  std::uint64_t n_ghost_total = 0;
};

// Wraps every owned position into the box, then migrates atoms that left the
// subdomain to the adjacent worker, one axis at a time (x, y, z); diagonal
// moves emerge from the sequential passes.  Peers are host workers (rank ==
// node id).  Throws NumericalBlowupError if an atom moved farther than one
// subdomain since the last rebuild.
ExchangePlan exchange(AtomStore& atoms, const Decomposition& decomp, Endpoint& ep,
                      std::uint64_t iteration, double timeout_s = -1.0);

// Applies the recorded ops to an arbitrary per-atom value array (the offload
// workers run this on F), exchanging batches over `ep` with peer rank ==
// node + rank_offset.  Returns the values in the host's post-exchange order.
// When `ids` is non-null it is migrated in lockstep (batches carry both), so
// the caller can verify slot identities against the host afterwards.
std::vector<Vec3> replay_exchange(std::vector<Vec3> values, const ExchangePlan& plan,
                                  Endpoint& ep, int rank_offset, std::uint64_t iteration,
                                  double timeout_s = -1.0,
                                  std::vector<std::uint64_t>* ids = nullptr);

// Rebuilds the ghost region: every atom within halo_width of a face is sent
// to that face's neighbor (periodic self-images included — an axis with one
// worker sends to itself).  Ghost slots receive the owner's raw coordinate
// plus an accumulated shift.  Returns the BorderMap communicate() reuses.
BorderMap border(AtomStore& atoms, const Decomposition& decomp, const SimParams& params,
                 Endpoint& ep, std::uint64_t iteration, double timeout_s = -1.0);

// Refreshes ghost raw coordinates from their owners over the recorded map;
// shifts are untouched.  Works for host workers (rank_offset 0) and offload
// workers (rank_offset P) alike.
void communicate(AtomStore& atoms, const BorderMap& map, Endpoint& ep, int rank_offset,
                 std::uint64_t iteration, double timeout_s = -1.0);

}  // namespace offmd

#endif
