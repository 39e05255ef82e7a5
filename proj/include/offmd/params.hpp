#ifndef OFFMD_PARAMS_HPP
#define OFFMD_PARAMS_HPP

#include <array>
#include <cstdint>

#include "offmd/errors.hpp"
#include "offmd/vec3.hpp"

namespace offmd {

// Simulation parameters in reduced LJ units (epsilon = sigma = m = k_B = 1 by
// default).  Defaults follow the common miniMD reference input: liquid argon
// density, cutoff 2.5 sigma, skin 0.3 sigma.
struct SimParams {
  double epsilon = 1.0;           // LJ energy scale
  double sigma = 1.0;             // LJ length scale
  double r_cut = 2.5;             // force cutoff
  double skin = 0.3;              // neighbor-list buffer distance
  double dt = 0.005;              // timestep
  int reneigh_interval = 20;      // iterations between neighbor rebuilds
  int sort_interval = 5;          // neighbor builds between atom reorderings (0 = never)
  int n_iterations = 100;         // total timesteps
  std::array<int, 3> unit_cells = {10, 10, 10};  // fcc cells per axis
  double density = 0.8442;        // reduced number density
  double t_init = 1.44;           // initial temperature
  std::uint64_t rng_seed = 87287; // velocity-seed base

  // Pairs closer than this are treated as a numerical blow-up, not physics.
  double min_separation = 0.001;  // in units of sigma

  std::uint64_t total_atoms() const {
    return 4ull * static_cast<std::uint64_t>(unit_cells[0]) *
           static_cast<std::uint64_t>(unit_cells[1]) *
           static_cast<std::uint64_t>(unit_cells[2]);
  }

  // Cubic fcc cell edge for the requested density (4 atoms per cell).
  double lattice_constant() const;

  double halo_width() const { return r_cut + skin; }

  // Throws ConfigError describing the first violated constraint.
  void validate() const;
};

// Periodic simulation box spanning [0, length) on every axis.
struct GlobalBox {
  Vec3 length;

  static GlobalBox from_params(const SimParams& p);
};

// Map each component of pos into [0, length).  Assumes the point is within
// one box length of the interval (atoms move far less than L per step).
Vec3 wrap_periodic(const Vec3& pos, const GlobalBox& box);

}  // namespace offmd

#endif
