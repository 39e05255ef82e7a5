#include "offmd/dynamics.hpp"

#include <atomic>
#include <cmath>
#include <string>

namespace offmd {

ForceResult force_compute(AtomStore& atoms, const NeighborList& nlist,
                          const SimParams& params, ThreadPool& pool) {
  const std::uint64_t n_local = atoms.n_local;
  if (nlist.n_local_at_build != n_local) {
    throw ProtocolDesyncError("force_compute: list built for " +
                              std::to_string(nlist.n_local_at_build) + " atoms, store has " +
                              std::to_string(n_local));
  }
  const double rcut2 = params.r_cut * params.r_cut;
  const double sigma2 = params.sigma * params.sigma;
  const double eps = params.epsilon;
  const double minsep2 = params.min_separation * params.min_separation;

  std::vector<double> pe(n_local, 0.0);
  // Worker threads cannot throw across parallel_for; remember the first bad
  // pair and raise after the join.
  std::atomic<std::uint64_t> bad_atom{UINT64_MAX};

  const double kernel_cpu = pool.parallel_for(
      n_local, [&](int, std::uint64_t begin, std::uint64_t end) {
        for (std::uint64_t i = begin; i < end; ++i) {
          const Vec3 xi = atoms.x[i];
          Vec3 fi{};
          double pe_i = 0.0;
          for (const std::uint32_t j : nlist.of(static_cast<std::uint32_t>(i))) {
            const Vec3 d = (xi - atoms.x[j]) - atoms.shift[j];
            const double r2 = d.norm2();
            if (r2 >= rcut2) continue;  // skin-only entry: no force this step
            if (!(r2 >= minsep2)) {     // also catches NaN
              std::uint64_t prev = UINT64_MAX;
              bad_atom.compare_exchange_strong(prev, i);
              break;
            }
            const double sr2 = sigma2 / r2;
            const double sr6 = sr2 * sr2 * sr2;
            const double fs = 24.0 * eps * sr6 * (2.0 * sr6 - 1.0) / r2;
            fi += fs * d;
            pe_i += 0.5 * (4.0 * eps * sr6 * (sr6 - 1.0));
          }
          atoms.f[i] = fi;
          pe[i] = pe_i;
        }
      });

  if (bad_atom.load() != UINT64_MAX) {
    const std::uint64_t i = bad_atom.load();
    throw NumericalBlowupError(
        "pair separation below the minimum-separation floor " +
        std::to_string(params.min_separation) + " at owned slot " + std::to_string(i) +
        " — timestep too large or initial overlap");
  }

  ForceResult res;
  res.kernel_cpu = kernel_cpu;
  for (std::uint64_t i = 0; i < n_local; ++i) res.potential += pe[i];
  return res;
}

void initial_integrate(AtomStore& atoms, const SimParams& params) {
  const double dt = params.dt;
  const double half = 0.5 * dt;
  for (std::uint64_t i = 0; i < atoms.n_local; ++i) {
    atoms.v[i] += half * atoms.f[i];
    atoms.x[i] += dt * atoms.v[i];
  }
}

void final_integrate(AtomStore& atoms, const SimParams& params) {
  const double half = 0.5 * params.dt;
  for (std::uint64_t i = 0; i < atoms.n_local; ++i) {
    atoms.v[i] += half * atoms.f[i];
  }
}

}  // namespace offmd
