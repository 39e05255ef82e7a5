#include "offmd/neighbor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace offmd {
namespace {

// Tolerance for positions that round a hair outside the grid: shifts are
// exact +-L but raw+shift rounds once.  Anything farther out than this is a
// real consistency failure, not fp noise.
double grid_tolerance(const Decomposition& d) { return 1e-9 * d.halo_width; }

struct BinIndexer {
  const CellGrid& g;
  const Decomposition& d;

  // Per-axis bin of a spatial coordinate, or -1 when out of tolerance.
  int axis_bin(double pos, int axis) const {
    const double rel = pos - g.origin[axis];
    const double tol = grid_tolerance(d);
    if (rel < -tol || rel > g.extent[axis] + tol) return -1;
    int b = static_cast<int>(rel * g.nbins[axis] / g.extent[axis]);
    if (b < 0) b = 0;
    if (b >= g.nbins[axis]) b = g.nbins[axis] - 1;
    return b;
  }

  int of(const Vec3& spatial) const {
    const int bx = axis_bin(spatial.x, 0);
    const int by = axis_bin(spatial.y, 1);
    const int bz = axis_bin(spatial.z, 2);
    if (bx < 0 || by < 0 || bz < 0) return -1;
    return bx + g.nbins[0] * (by + g.nbins[1] * bz);
  }
};

}  // namespace

CellGrid build_cell_grid(const AtomStore& atoms, const Decomposition& decomp) {
  CellGrid g;
  for (int a = 0; a < 3; ++a) {
    g.origin[a] = decomp.sub_lo[a] - decomp.halo_width;
    g.extent[a] = (decomp.sub_hi[a] - decomp.sub_lo[a]) + 2.0 * decomp.halo_width;
    const int nb = static_cast<int>(g.extent[a] / decomp.halo_width);
    g.nbins[a] = nb < 1 ? 1 : nb;
  }

  const std::uint64_t n = atoms.n_total();
  const int nbins = g.total_bins();
  const BinIndexer idx{g, decomp};

  std::vector<std::uint32_t> bin_of(n);
  std::vector<std::uint32_t> count(nbins, 0);
  for (std::uint64_t s = 0; s < n; ++s) {
    const int b = idx.of(atoms.spatial(s));
    if (b < 0) {
      throw NumericalBlowupError(
          "atom slot " + std::to_string(s) + " lies outside the binnable region (" +
          (s < atoms.n_local ? "owned" : "ghost") +
          "); a missed exchange or non-finite coordinates");
    }
    bin_of[s] = static_cast<std::uint32_t>(b);
    ++count[b];
  }

  g.bin_start.assign(nbins + 1, 0);
  for (int b = 0; b < nbins; ++b) g.bin_start[b + 1] = g.bin_start[b] + count[b];
  g.slot.resize(n);
  std::vector<std::uint32_t> cursor(g.bin_start.begin(), g.bin_start.end() - 1);
  // Filling in ascending slot order keeps each bin's list ascending, which
  // pins the candidate scan order for deterministic force accumulation.
  for (std::uint64_t s = 0; s < n; ++s) g.slot[cursor[bin_of[s]]++] = static_cast<std::uint32_t>(s);
  return g;
}

NeighborList neighbor_build(const AtomStore& atoms, const SimParams& params,
                            const Decomposition& decomp, ThreadPool& pool,
                            std::uint64_t iteration, double* kernel_cpu) {
  const CellGrid grid = build_cell_grid(atoms, decomp);
  const BinIndexer idx{grid, decomp};
  const double reach = params.r_cut + params.skin;
  const double reach2 = reach * reach;
  const std::uint64_t n_local = atoms.n_local;

  NeighborList list;
  list.build_iteration = iteration;
  list.n_local_at_build = static_cast<std::uint32_t>(n_local);
  list.start.assign(n_local + 1, 0);

  const int nchunks = pool.size();
  std::vector<std::vector<std::uint32_t>> chunk_neigh(nchunks);

  const double cpu = pool.parallel_for(n_local, [&](int chunk, std::uint64_t begin, std::uint64_t end) {
    auto& out = chunk_neigh[chunk];
    out.reserve((end - begin) * 64);
    for (std::uint64_t i = begin; i < end; ++i) {
      const Vec3 xi = atoms.x[i];  // owned: shift is zero, spatial == x
      const int bx = idx.axis_bin(xi.x, 0);
      const int by = idx.axis_bin(xi.y, 1);
      const int bz = idx.axis_bin(xi.z, 2);
      std::uint32_t n_mine = 0;
      for (int cz = std::max(0, bz - 1); cz <= std::min(grid.nbins[2] - 1, bz + 1); ++cz) {
        for (int cy = std::max(0, by - 1); cy <= std::min(grid.nbins[1] - 1, by + 1); ++cy) {
          for (int cx = std::max(0, bx - 1); cx <= std::min(grid.nbins[0] - 1, bx + 1); ++cx) {
            const int b = cx + grid.nbins[0] * (cy + grid.nbins[1] * cz);
            for (const std::uint32_t j : grid.bin(b)) {
              if (j == i) continue;
              const Vec3 d = (xi - atoms.x[j]) - atoms.shift[j];
              if (d.norm2() < reach2) {
                out.push_back(j);
                ++n_mine;
              }
            }
          }
        }
      }
      list.start[i + 1] = n_mine;  // count for now; prefix-summed below
    }
  });

  for (std::uint64_t i = 0; i < n_local; ++i) list.start[i + 1] += list.start[i];
  list.neigh.resize(list.start[n_local]);
  std::uint64_t off = 0;
  for (int c = 0; c < nchunks; ++c) {
    std::copy(chunk_neigh[c].begin(), chunk_neigh[c].end(), list.neigh.begin() + off);
    off += chunk_neigh[c].size();
  }
  if (kernel_cpu) *kernel_cpu = cpu;
  return list;
}

PermutationRecord sort_atoms(AtomStore& atoms, const Decomposition& decomp) {
  if (atoms.n_ghost != 0) {
    throw ProtocolDesyncError("sort_atoms requires a ghost-free store (run between exchange and border)");
  }
  const std::uint64_t n = atoms.n_local;
  const CellGrid grid = build_cell_grid(atoms, decomp);

  // grid.slot is already (bin-major, slot-ascending within bin): exactly the
  // stable bin order the sort wants.  order[k] = old slot of the atom that
  // lands at new slot k.
  const std::vector<std::uint32_t>& order = grid.slot;

  PermutationRecord rec;
  rec.perm.resize(n);
  for (std::uint64_t k = 0; k < n; ++k) rec.perm[order[k]] = static_cast<std::uint32_t>(k);

  auto permute = [&](std::vector<Vec3>& a) {
    std::vector<Vec3> out(n);
    for (std::uint64_t k = 0; k < n; ++k) out[k] = a[order[k]];
    a = std::move(out);
  };
  permute(atoms.x);
  permute(atoms.v);
  permute(atoms.f);
  if (atoms.tracks_ids()) {
    std::vector<std::uint64_t> out(n);
    for (std::uint64_t k = 0; k < n; ++k) out[k] = atoms.gid[order[k]];
    atoms.gid = std::move(out);
  }
  return rec;
}

std::vector<Vec3> apply_permutation(const std::vector<Vec3>& values,
                                    const PermutationRecord& perm) {
  if (values.size() != perm.perm.size()) {
    throw ProtocolDesyncError("apply_permutation: " + std::to_string(values.size()) +
                              " values vs permutation of length " +
                              std::to_string(perm.perm.size()));
  }
  std::vector<Vec3> out(values.size());
  for (std::size_t j = 0; j < values.size(); ++j) out[perm.perm[j]] = values[j];
  return out;
}

std::vector<std::uint64_t> apply_permutation(const std::vector<std::uint64_t>& values,
                                             const PermutationRecord& perm) {
  if (values.size() != perm.perm.size()) {
    throw ProtocolDesyncError("apply_permutation: " + std::to_string(values.size()) +
                              " values vs permutation of length " +
                              std::to_string(perm.perm.size()));
  }
  std::vector<std::uint64_t> out(values.size());
  for (std::size_t j = 0; j < values.size(); ++j) out[perm.perm[j]] = values[j];
  return out;
}

}  // namespace offmd
