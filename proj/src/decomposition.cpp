#include "offmd/decomposition.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace offmd {

int Decomposition::node_of_coords(const std::array<int, 3>& grid, int cx, int cy, int cz) {
  return cx + grid[0] * (cy + grid[1] * cz);
}

int Decomposition::neighbor(int axis, int dir) const {
  std::array<int, 3> c = my_coords;
  c[axis] += dir;
  if (c[axis] < 0) c[axis] += proc_grid[axis];
  if (c[axis] >= proc_grid[axis]) c[axis] -= proc_grid[axis];
  return node_of_coords(proc_grid, c[0], c[1], c[2]);
}

std::array<int, 3> best_proc_grid(int n_nodes, const Vec3& box_length) {
  // Enumerate every factorization px*py*pz == P and keep the one with the
  // smallest total subdomain surface area.
  std::array<int, 3> best = {1, 1, n_nodes};
  double best_surf = std::numeric_limits<double>::max();
  for (int px = 1; px <= n_nodes; ++px) {
    if (n_nodes % px != 0) continue;
    const int rem = n_nodes / px;
    for (int py = 1; py <= rem; ++py) {
      if (rem % py != 0) continue;
      const int pz = rem / py;
      const double sx = box_length.x / px;
      const double sy = box_length.y / py;
      const double sz = box_length.z / pz;
      const double surf = sx * sy + sy * sz + sx * sz;
      if (surf < best_surf) {
        best_surf = surf;
        best = {px, py, pz};
      }
    }
  }
  return best;
}

Decomposition create_decomposition(const SimParams& params, int n_nodes, int node) {
  params.validate();
  if (n_nodes < 1) throw ConfigError("worker node count must be >= 1");
  if (node < 0 || node >= n_nodes) throw ConfigError("node id out of range");

  Decomposition d;
  d.n_nodes = n_nodes;
  d.node = node;
  d.box = GlobalBox::from_params(params);
  d.halo_width = params.halo_width();
  d.proc_grid = best_proc_grid(n_nodes, d.box.length);

  int rest = node;
  d.my_coords[0] = rest % d.proc_grid[0];
  rest /= d.proc_grid[0];
  d.my_coords[1] = rest % d.proc_grid[1];
  d.my_coords[2] = rest / d.proc_grid[1];

  for (int a = 0; a < 3; ++a) {
    const double L = d.box.length[a];
    const int pg = d.proc_grid[a];
    const int c = d.my_coords[a];
    // bound(i) = L*i/pg evaluated identically on every worker, so c's upper
    // bound is bitwise c+1's lower bound: the slabs tile exactly.
    auto bound = [&](int i) { return i == pg ? L : L * i / pg; };
    d.sub_lo[a] = bound(c);
    d.sub_hi[a] = bound(c + 1);
    const double width = d.sub_hi[a] - d.sub_lo[a];
    if (pg > 1 && width < d.halo_width) {
      throw ConfigError(
          "subdomain width " + std::to_string(width) + " on axis " + std::to_string(a) +
          " is thinner than the halo width " + std::to_string(d.halo_width) +
          " (r_cut + skin); use fewer workers or a larger box");
    }
  }
  return d;
}

}  // namespace offmd
