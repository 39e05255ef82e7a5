#ifndef OFFMD_LATTICE_HPP
#define OFFMD_LATTICE_HPP

#include "offmd/atom_store.hpp"
#include "offmd/decomposition.hpp"
#include "offmd/params.hpp"

namespace offmd {

// Fill this worker's subdomain with its share of the global fcc lattice and
// draw initial velocities.
//
// Velocities come from a PRNG seeded per *global lattice site*, then every
// worker independently walks all global sites in the same fixed order to
// compute the zero-momentum shift and the temperature rescale factor.  The
// result is bitwise independent of the decomposition and needs no
// communication.  Forces start zeroed.
//
// Throws ConfigError if any subdomain ends up with zero atoms (degenerate
// decomposition for the given lattice).
AtomStore create_lattice(const SimParams& params, const Decomposition& decomp,
                         bool track_ids = true);

// T = sum(|v|^2) / (3N) over owned atoms of one store (m = 1).  Whole-system
// temperature is assembled from per-worker sums by the caller.
double kinetic_sum(const AtomStore& atoms);

}  // namespace offmd

#endif
