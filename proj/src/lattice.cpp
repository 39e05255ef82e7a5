#include "offmd/lattice.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace offmd {
namespace {

std::uint64_t splitmix64(std::uint64_t& s) {
  s += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double unit_double(std::uint64_t r) {
  // 53 high bits -> [0, 1)
  return static_cast<double>(r >> 11) * 0x1.0p-53;
}

// Raw velocity for one global lattice site: a function of (seed, site) only,
// so every worker reproduces it without communication.
Vec3 site_velocity(std::uint64_t seed, std::uint64_t site) {
  std::uint64_t s = seed ^ (site * 0xD1B54A32D192ED03ull);
  Vec3 v;
  v.x = unit_double(splitmix64(s)) - 0.5;
  v.y = unit_double(splitmix64(s)) - 0.5;
  v.z = unit_double(splitmix64(s)) - 0.5;
  return v;
}

// Axis slab index owning `pos`, consistent bitwise with the bounds used in
// create_decomposition (same bound expression, same comparisons).
int slab_of(double pos, double L, int pg) {
  auto bound = [&](int i) { return i == pg ? L : L * i / pg; };
  int c = static_cast<int>(pos / L * pg);
  if (c > pg - 1) c = pg - 1;
  if (c < 0) c = 0;
  while (c > 0 && pos < bound(c)) --c;
  while (c < pg - 1 && pos >= bound(c + 1)) ++c;
  return c;
}

}  // namespace

AtomStore create_lattice(const SimParams& params, const Decomposition& decomp,
                         bool track_ids) {
  params.validate();
  const double a = params.lattice_constant();
  const int nx = params.unit_cells[0];
  const int ny = params.unit_cells[1];
  const std::uint64_t n_sites = params.total_atoms();

  static const double basis[4][3] = {
      {0.0, 0.0, 0.0}, {0.5, 0.5, 0.0}, {0.5, 0.0, 0.5}, {0.0, 0.5, 0.5}};

  auto site_pos = [&](std::uint64_t site) {
    const int b = static_cast<int>(site & 3u);
    std::uint64_t cell = site >> 2;
    const int ix = static_cast<int>(cell % nx);
    cell /= nx;
    const int iy = static_cast<int>(cell % ny);
    const int iz = static_cast<int>(cell / ny);
    return Vec3{(ix + basis[b][0]) * a, (iy + basis[b][1]) * a, (iz + basis[b][2]) * a};
  };

  // Pass 1: net raw momentum over all global sites (identical on every
  // worker: same seed, same site order).
  Vec3 vsum;
  for (std::uint64_t s = 0; s < n_sites; ++s) vsum += site_velocity(params.rng_seed, s);
  const Vec3 vavg = vsum * (1.0 / static_cast<double>(n_sites));

  // Pass 2: temperature of the shifted velocities, for the rescale factor.
  double ke2 = 0.0;
  for (std::uint64_t s = 0; s < n_sites; ++s) {
    const Vec3 dv = site_velocity(params.rng_seed, s) - vavg;
    ke2 += dv.norm2();
  }
  const double t_unscaled = ke2 / (3.0 * static_cast<double>(n_sites));
  const double scale = t_unscaled > 0.0 ? std::sqrt(params.t_init / t_unscaled) : 0.0;

  // Pass 3: keep the sites in my subdomain; count every node's share so a
  // degenerate decomposition is rejected identically everywhere.
  AtomStore atoms;
  atoms.x.reserve(n_sites / decomp.n_nodes + 16);
  std::vector<std::uint64_t> node_count(decomp.n_nodes, 0);
  for (std::uint64_t s = 0; s < n_sites; ++s) {
    const Vec3 pos = site_pos(s);
    const int cx = slab_of(pos.x, decomp.box.length.x, decomp.proc_grid[0]);
    const int cy = slab_of(pos.y, decomp.box.length.y, decomp.proc_grid[1]);
    const int cz = slab_of(pos.z, decomp.box.length.z, decomp.proc_grid[2]);
    const int owner = Decomposition::node_of_coords(decomp.proc_grid, cx, cy, cz);
    ++node_count[owner];
    if (owner == decomp.node) {
      const Vec3 vel = (site_velocity(params.rng_seed, s) - vavg) * scale;
      atoms.push_owned(pos, vel, s, track_ids);
    }
  }
  for (int nid = 0; nid < decomp.n_nodes; ++nid) {
    if (node_count[nid] == 0) {
      throw ConfigError("degenerate decomposition: node " + std::to_string(nid) +
                        " owns zero lattice atoms");
    }
  }
  return atoms;
}

double kinetic_sum(const AtomStore& atoms) {
  double sum = 0.0;
  for (std::uint64_t i = 0; i < atoms.n_local; ++i) sum += atoms.v[i].norm2();
  return sum;
}

}  // namespace offmd
