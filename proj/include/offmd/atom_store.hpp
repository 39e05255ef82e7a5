#ifndef OFFMD_ATOM_STORE_HPP
#define OFFMD_ATOM_STORE_HPP

#include <cstdint>
#include <vector>

#include "offmd/vec3.hpp"

namespace offmd {

// Per-worker atom storage.  Owned atoms occupy slots [0, n_local); ghost
// copies of remote (or periodic-image) atoms occupy [n_local, n_local+n_ghost).
//
// A slot index is a *transient* identity: it stays valid only between
// consecutive reordering events (exchange or sort).
//
// Ghost slots hold the owner's raw coordinate in `x` plus a periodic shift in
// `shift` (each component exactly -L, 0, or +L).  The spatial position of a
// slot is x[i] + shift[i]; owned slots always carry a zero shift.  Keeping raw
// and shift separate lets pair separations be computed as (x[i]-x[j])-shift[j],
// which is exactly antisymmetric between the two workers that see the same
// pair — mirrored forces then cancel bitwise and global momentum is conserved
// to rounding of the accumulations alone.
struct AtomStore {
  std::vector<Vec3> x;       // positions (owned: true; ghost: owner's raw)
  std::vector<Vec3> v;       // velocities (owned only; ghost entries unused)
  std::vector<Vec3> f;       // forces (owned only)
  std::vector<Vec3> shift;   // periodic shift per slot (zero for owned)
  std::vector<std::uint64_t> gid;  // global ids (shadow identity; may be empty)
  std::uint64_t n_local = 0;
  std::uint64_t n_ghost = 0;

  bool tracks_ids() const { return !gid.empty(); }
  std::uint64_t n_total() const { return n_local + n_ghost; }

  Vec3 spatial(std::uint64_t slot) const { return x[slot] + shift[slot]; }

  // Drop all ghosts; arrays shrink back to n_local entries.
  void clear_ghosts();

  // Append one owned atom (used by lattice fill and exchange unpack).
  void push_owned(const Vec3& pos, const Vec3& vel, std::uint64_t id, bool track_ids);

  // Remove owned slot i by moving the last owned atom into it (the standard
  // compaction move; the caller records it in the exchange plan).
  void remove_owned_swap_last(std::uint64_t slot);

  // Grow ghost region by n slots (values filled by the caller).
  std::uint64_t append_ghost_slots(std::uint64_t n);
};

}  // namespace offmd

#endif
