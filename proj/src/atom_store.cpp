#include "offmd/atom_store.hpp"

namespace offmd {

void AtomStore::clear_ghosts() {
  n_ghost = 0;
  x.resize(n_local);
  shift.resize(n_local);
  // v/f/gid never carry ghost entries.
}

void AtomStore::push_owned(const Vec3& pos, const Vec3& vel, std::uint64_t id, bool track_ids) {
  // Only legal while no ghosts are appended (exchange runs ghost-free).
  x.push_back(pos);
  v.push_back(vel);
  f.push_back(Vec3{});
  shift.push_back(Vec3{});
  if (track_ids) gid.push_back(id);
  ++n_local;
}

void AtomStore::remove_owned_swap_last(std::uint64_t slot) {
  const std::uint64_t last = n_local - 1;
  if (slot != last) {
    x[slot] = x[last];
    v[slot] = v[last];
    f[slot] = f[last];
    if (!gid.empty()) gid[slot] = gid[last];
  }
  x.pop_back();
  v.pop_back();
  f.pop_back();
  shift.pop_back();
  if (!gid.empty()) gid.pop_back();
  --n_local;
}

std::uint64_t AtomStore::append_ghost_slots(std::uint64_t n) {
  const std::uint64_t first = n_local + n_ghost;
  x.resize(first + n);
  shift.resize(first + n);
  n_ghost += n;
  return first;
}

}  // namespace offmd
