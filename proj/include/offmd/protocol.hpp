#ifndef OFFMD_PROTOCOL_HPP
#define OFFMD_PROTOCOL_HPP

#include <cstdint>
#include <vector>

#include "offmd/halo.hpp"
#include "offmd/neighbor.hpp"
#include "offmd/wire.hpp"

namespace offmd {

// Host/offload control payload kinds (beyond the halo batch traffic).  Every
// payload opens with (kind, iteration) so a worker that slips out of protocol
// step fails with exact diagnostics instead of reading garbage.
enum class MsgKind : std::uint32_t {
  snapshot = 1,   // owned positions after initial_integrate
  plan_perm = 2,  // exchange plan + optional sort permutation
  f_result = 3,   // forces (and potential) coming home
  list_map = 4,   // neighbor list + border map + ghost shifts (+ ids)
  thermo = 5,     // per-sample reduction partials
  digest = 6,     // per-iteration trajectory hash partials
  rows = 7,       // final-state gather for snapshot dumps
};

void msg_header(WireWriter& w, MsgKind kind, std::uint64_t iteration);

// Validates and consumes the header; throws ProtocolDesyncError naming the
// expectation and what actually arrived.
void expect_msg(WireReader& r, MsgKind kind, std::uint64_t iteration, const char* what);

void write_plan(WireWriter& w, const ExchangePlan& plan);
ExchangePlan read_plan(WireReader& r);

void write_border_map(WireWriter& w, const BorderMap& map);
BorderMap read_border_map(WireReader& r);

void write_nlist(WireWriter& w, const NeighborList& list);
NeighborList read_nlist(WireReader& r);

void write_perm(WireWriter& w, const PermutationRecord& perm);
PermutationRecord read_perm(WireReader& r);

void write_vec3_array(WireWriter& w, const std::vector<Vec3>& v);
std::vector<Vec3> read_vec3_array(WireReader& r);

void write_u64_array(WireWriter& w, const std::vector<std::uint64_t>& v);
std::vector<std::uint64_t> read_u64_array(WireReader& r);

}  // namespace offmd

#endif
