#ifndef OFFMD_DYNAMICS_HPP
#define OFFMD_DYNAMICS_HPP

#include "offmd/atom_store.hpp"
#include "offmd/neighbor.hpp"
#include "offmd/parallel.hpp"
#include "offmd/params.hpp"

namespace offmd {

struct ForceResult {
  double potential = 0.0;   // sum of pair potentials, each pair counted once
  double kernel_cpu = 0.0;  // max per-thread CPU inside the kernel (throttle base)
};

// Lennard-Jones forces over the neighbor list, truncated (unshifted) at
// r_cut.  For each owned i:  f[i] = sum over j in list(i), r < r_cut of
// 24*eps*(2 (sigma/r)^12 - (sigma/r)^6) / r^2 * d,  d = (x[i]-x[j]) - shift[j].
//
// d is exactly antisymmetric between the two views of a pair (see AtomStore),
// so mirrored contributions cancel bitwise.  Potential energy is accumulated
// per atom (half per list entry) and reduced sequentially, making the
// returned sum bitwise independent of the thread count.
//
// Throws NumericalBlowupError when a pair comes closer than
// params.min_separation (or a distance goes non-finite).
ForceResult force_compute(AtomStore& atoms, const NeighborList& nlist,
                          const SimParams& params, ThreadPool& pool);

// First velocity-Verlet half-kick plus drift: v += dt/2 * f, then x += dt * v
// (owned atoms; m = 1).  Positions may leave the subdomain/box between
// rebuilds; exchange re-wraps and re-homes them.
void initial_integrate(AtomStore& atoms, const SimParams& params);

// Second half-kick: v += dt/2 * f.
void final_integrate(AtomStore& atoms, const SimParams& params);

}  // namespace offmd

#endif
