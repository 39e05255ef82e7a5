#include "offmd/protocol.hpp"

#include <string>

#include "offmd/errors.hpp"

namespace offmd {
namespace {

const char* kind_name(MsgKind k) {
  switch (k) {
    case MsgKind::snapshot: return "snapshot";
    case MsgKind::plan_perm: return "plan_perm";
    case MsgKind::f_result: return "f_result";
    case MsgKind::list_map: return "list_map";
    case MsgKind::thermo: return "thermo";
    case MsgKind::digest: return "digest";
    case MsgKind::rows: return "rows";
  }
  return "?";
}

}  // namespace

void msg_header(WireWriter& w, MsgKind kind, std::uint64_t iteration) {
  w.u32(static_cast<std::uint32_t>(kind));
  w.u64(iteration);
}

void expect_msg(WireReader& r, MsgKind kind, std::uint64_t iteration, const char* what) {
  const std::uint32_t got_kind = r.u32();
  const std::uint64_t got_iter = r.u64();
  if (got_kind != static_cast<std::uint32_t>(kind) || got_iter != iteration) {
    throw ProtocolDesyncError(std::string(what) + ": expected " + kind_name(kind) +
                              " for iteration " + std::to_string(iteration) + ", got " +
                              kind_name(static_cast<MsgKind>(got_kind)) + " (" +
                              std::to_string(got_kind) + ") for iteration " +
                              std::to_string(got_iter));
  }
}

namespace {

void write_u32_array(WireWriter& w, const std::vector<std::uint32_t>& v) {
  w.u32(static_cast<std::uint32_t>(v.size()));
  for (const std::uint32_t e : v) w.u32(e);
}

std::vector<std::uint32_t> read_u32_array(WireReader& r) {
  const std::uint32_t n = r.u32();
  std::vector<std::uint32_t> v(n);
  for (std::uint32_t k = 0; k < n; ++k) v[k] = r.u32();
  return v;
}

}  // namespace

void write_plan(WireWriter& w, const ExchangePlan& plan) {
  w.u32(plan.n_before);
  w.u32(plan.n_after);
  for (const auto& a : plan.axes) {
    w.u32(static_cast<std::uint32_t>(a.mode));
    w.u32(a.west_node);
    w.u32(a.east_node);
    write_u32_array(w, a.departures);
    write_u32_array(w, a.accept_east);
    write_u32_array(w, a.accept_west);
    w.u32(a.batch_len_east);
    w.u32(a.batch_len_west);
  }
}

ExchangePlan read_plan(WireReader& r) {
  ExchangePlan plan;
  plan.n_before = r.u32();
  plan.n_after = r.u32();
  for (auto& a : plan.axes) {
    const std::uint32_t mode = r.u32();
    if (mode > 2) {
      throw ProtocolDesyncError("exchange plan: invalid pass mode " + std::to_string(mode));
    }
    a.mode = static_cast<PassMode>(mode);
    a.west_node = r.u32();
    a.east_node = r.u32();
    a.departures = read_u32_array(r);
    a.accept_east = read_u32_array(r);
    a.accept_west = read_u32_array(r);
    a.batch_len_east = r.u32();
    a.batch_len_west = r.u32();
  }
  return plan;
}

void write_border_map(WireWriter& w, const BorderMap& map) {
  w.u32(map.n_local_at_build);
  w.u64(map.n_ghost_total);
  for (const auto& a : map.axes) {
    w.u32(a.west_node);
    w.u32(a.east_node);
    w.vec3(a.west_pack_shift);
    w.vec3(a.east_pack_shift);
    write_u32_array(w, a.west_send_slots);
    write_u32_array(w, a.east_send_slots);
    w.u32(a.recv_east_first);
    w.u32(a.recv_east_count);
    w.u32(a.recv_west_first);
    w.u32(a.recv_west_count);
  }
}

BorderMap read_border_map(WireReader& r) {
  BorderMap map;
  map.n_local_at_build = r.u32();
  map.n_ghost_total = r.u64();
  for (auto& a : map.axes) {
    a.west_node = r.u32();
    a.east_node = r.u32();
    a.west_pack_shift = r.vec3();
    a.east_pack_shift = r.vec3();
    a.west_send_slots = read_u32_array(r);
    a.east_send_slots = read_u32_array(r);
    a.recv_east_first = r.u32();
    a.recv_east_count = r.u32();
    a.recv_west_first = r.u32();
    a.recv_west_count = r.u32();
  }
  return map;
}

void write_nlist(WireWriter& w, const NeighborList& list) {
  w.u64(list.build_iteration);
  w.u32(list.n_local_at_build);
  w.u32(static_cast<std::uint32_t>(list.start.size()));
  for (const std::uint32_t e : list.start) w.u32(e);
  w.u64(list.neigh.size());
  for (const std::uint32_t e : list.neigh) w.u32(e);
}

NeighborList read_nlist(WireReader& r) {
  NeighborList list;
  list.build_iteration = r.u64();
  list.n_local_at_build = r.u32();
  const std::uint32_t ns = r.u32();
  list.start.resize(ns);
  for (std::uint32_t k = 0; k < ns; ++k) list.start[k] = r.u32();
  const std::uint64_t nn = r.u64();
  list.neigh.resize(nn);
  for (std::uint64_t k = 0; k < nn; ++k) list.neigh[k] = r.u32();
  if (ns != list.n_local_at_build + 1u || (ns > 0 && list.start.back() != nn)) {
    throw ProtocolDesyncError("neighbor list payload inconsistent: " + std::to_string(ns) +
                              " offsets for " + std::to_string(list.n_local_at_build) +
                              " atoms, " + std::to_string(nn) + " entries");
  }
  return list;
}

void write_perm(WireWriter& w, const PermutationRecord& perm) {
  write_u32_array(w, perm.perm);
}

PermutationRecord read_perm(WireReader& r) {
  PermutationRecord rec;
  rec.perm = read_u32_array(r);
  return rec;
}

void write_vec3_array(WireWriter& w, const std::vector<Vec3>& v) {
  w.u64(v.size());
  for (const Vec3& e : v) w.vec3(e);
}

std::vector<Vec3> read_vec3_array(WireReader& r) {
  const std::uint64_t n = r.u64();
  std::vector<Vec3> v(n);
  for (std::uint64_t k = 0; k < n; ++k) v[k] = r.vec3();
  return v;
}

void write_u64_array(WireWriter& w, const std::vector<std::uint64_t>& v) {
  w.u64(v.size());
  for (const std::uint64_t e : v) w.u64(e);
}

std::vector<std::uint64_t> read_u64_array(WireReader& r) {
  const std::uint64_t n = r.u64();
  std::vector<std::uint64_t> v(n);
  for (std::uint64_t k = 0; k < n; ++k) v[k] = r.u64();
  return v;
}

}  // namespace offmd
