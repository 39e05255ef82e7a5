#include "offmd/params.hpp"

#include <cmath>
#include <string>

namespace offmd {

double SimParams::lattice_constant() const {
  return std::cbrt(4.0 / density);
}

void SimParams::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("invalid parameters: " + msg); };
  if (!(epsilon > 0.0)) fail("epsilon must be > 0");
  if (!(sigma > 0.0)) fail("sigma must be > 0");
  if (!(r_cut > 0.0)) fail("r_cut must be > 0");
  if (!(skin >= 0.0)) fail("skin must be >= 0");
  if (!(dt > 0.0)) fail("dt must be > 0");
  if (reneigh_interval < 1) fail("reneigh_interval must be >= 1");
  if (sort_interval < 0) fail("sort_interval must be >= 0");
  if (n_iterations < 0) fail("n_iterations must be >= 0");
  if (!(density > 0.0)) fail("density must be > 0");
  if (!(t_init >= 0.0)) fail("t_init must be >= 0");
  if (!(min_separation > 0.0)) fail("min_separation must be > 0");
  for (int a = 0; a < 3; ++a) {
    if (unit_cells[a] < 1) fail("unit_cells must be >= 1 per axis");
  }
}

GlobalBox GlobalBox::from_params(const SimParams& p) {
  const double a = p.lattice_constant();
  GlobalBox box;
  box.length = Vec3{p.unit_cells[0] * a, p.unit_cells[1] * a, p.unit_cells[2] * a};
  return box;
}

Vec3 wrap_periodic(const Vec3& pos, const GlobalBox& box) {
  Vec3 out = pos;
  for (int a = 0; a < 3; ++a) {
    const double L = box.length[a];
    if (out[a] < 0.0) out[a] += L;
    if (out[a] >= L) out[a] -= L;
    // A coordinate that still isn't inside can only mean the precondition
    // (|excursion| < L) was violated upstream; leave it for the owner checks.
  }
  return out;
}

}  // namespace offmd
