#ifndef OFFMD_DECOMPOSITION_HPP
#define OFFMD_DECOMPOSITION_HPP

#include <array>

#include "offmd/params.hpp"
#include "offmd/vec3.hpp"

namespace offmd {

// One worker node's slice of the spatially decomposed box.  Subdomains tile
// the box exactly: worker c's upper bound on an axis is bitwise the same
// expression as worker c+1's lower bound, so ownership tests agree across
// workers with no gaps or double-claims even at fp boundaries.
struct Decomposition {
  int n_nodes = 1;                     // total worker nodes P
  int node = 0;                        // my node id in [0, P)
  std::array<int, 3> proc_grid = {1, 1, 1};
  std::array<int, 3> my_coords = {0, 0, 0};
  Vec3 sub_lo;                         // subdomain lower corner (inclusive)
  Vec3 sub_hi;                         // subdomain upper corner (exclusive)
  double halo_width = 0.0;             // r_cut + skin
  GlobalBox box;

  bool owns(const Vec3& pos) const {
    return pos.x >= sub_lo.x && pos.x < sub_hi.x && pos.y >= sub_lo.y &&
           pos.y < sub_hi.y && pos.z >= sub_lo.z && pos.z < sub_hi.z;
  }

  // Neighbor node id one step along `axis` in direction dir (-1 west, +1
  // east), with periodic wraparound of the grid.
  int neighbor(int axis, int dir) const;

  static int node_of_coords(const std::array<int, 3>& grid, int cx, int cy, int cz);
};

// Split P into (px, py, pz) minimizing total subdomain surface area (the same
// criterion the reference MD codes use), then carve the box into slabs.
// Throws ConfigError if any subdomain would be thinner than the halo width:
// this build supports exactly one ±1-hop ghost swap per axis.
Decomposition create_decomposition(const SimParams& params, int n_nodes, int node);

// Grid factorization alone (exposed for tests).
std::array<int, 3> best_proc_grid(int n_nodes, const Vec3& box_length);

}  // namespace offmd

#endif
