#ifndef OFFMD_NEIGHBOR_HPP
#define OFFMD_NEIGHBOR_HPP

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "offmd/atom_store.hpp"
#include "offmd/decomposition.hpp"
#include "offmd/parallel.hpp"
#include "offmd/params.hpp"

namespace offmd {

// Spatial binning of all slots (owned + ghost) over the subdomain plus its
// halo ring.  Bin side >= r_cut + skin, so neighbor candidates of an owned
// atom are confined to the 27-bin stencil around its bin; when the subdomain
// is too small for three bins an axis degenerates to fewer bins and the
// stencil simply spans what exists (the distance filter does the rest).
struct CellGrid {
  std::array<int, 3> nbins = {1, 1, 1};
  Vec3 origin;    // sub_lo - halo
  Vec3 extent;    // subdomain + 2*halo per axis
  std::vector<std::uint32_t> bin_start;  // CSR offsets, size nbins+1
  std::vector<std::uint32_t> slot;       // slots ordered by bin, ascending within

  int total_bins() const { return nbins[0] * nbins[1] * nbins[2]; }

  std::span<const std::uint32_t> bin(int b) const {
    return {slot.data() + bin_start[b], slot.data() + bin_start[b + 1]};
  }
};

// Bins every slot by its spatial position (x + shift).  Throws
// NumericalBlowupError if a position falls outside the grid beyond fp
// tolerance — that means an exchange was missed or coordinates blew up.
CellGrid build_cell_grid(const AtomStore& atoms, const Decomposition& decomp);

// Per-owned-atom candidate lists: all slots j (owned or ghost) within
// r_cut + skin, stored as one CSR structure.  Lists are full (symmetric):
// for owned i, j the pair appears in both lists.
struct NeighborList {
  std::vector<std::uint32_t> start;  // size n_local+1
  std::vector<std::uint32_t> neigh;
  std::uint64_t build_iteration = 0;
  std::uint32_t n_local_at_build = 0;

  std::span<const std::uint32_t> of(std::uint32_t i) const {
    return {neigh.data() + start[i], neigh.data() + start[i + 1]};
  }
  std::uint64_t total_pairs() const { return neigh.size(); }
};

// Requires ghosts current (border has run since atoms last moved across
// boundaries).  Candidate scan order is fixed (stencil bins ascending, slots
// ascending within a bin) and chunking is contiguous, so the list — and every
// downstream force accumulation — is bitwise independent of the thread count.
// kernel_cpu (optional) receives the max per-thread CPU time of the scan,
// the basis for emulating a slower processor.
NeighborList neighbor_build(const AtomStore& atoms, const SimParams& params,
                            const Decomposition& decomp, ThreadPool& pool,
                            std::uint64_t iteration, double* kernel_cpu = nullptr);

// Where the atom previously at slot j now lives: perm[j] = new slot.
struct PermutationRecord {
  std::vector<std::uint32_t> perm;

  bool empty() const { return perm.empty(); }
  std::size_t size() const { return perm.size(); }
};

// Reorder owned atoms by ascending cell-grid bin (row-major), stable by prior
// slot within a bin; x, v, f (and ids) move together.  Must be called with no
// ghosts present (between exchange and border) since it invalidates slots.
PermutationRecord sort_atoms(AtomStore& atoms, const Decomposition& decomp);

// out[perm[j]] = values[j].  Throws ProtocolDesyncError on length mismatch.
std::vector<Vec3> apply_permutation(const std::vector<Vec3>& values,
                                    const PermutationRecord& perm);
std::vector<std::uint64_t> apply_permutation(const std::vector<std::uint64_t>& values,
                                             const PermutationRecord& perm);

}  // namespace offmd

#endif
