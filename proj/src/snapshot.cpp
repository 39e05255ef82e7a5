#include "offmd/snapshot.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "offmd/errors.hpp"

namespace offmd {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_snapshot(std::ostream& out, const SnapshotData& snap) {
  out << snap.rows.size() << ' ' << format_double(snap.box_length.x) << ' '
      << format_double(snap.box_length.y) << ' ' << format_double(snap.box_length.z)
      << ' ' << snap.iteration << '\n';
  for (const auto& r : snap.rows) {
    out << r.id << ' ' << format_double(r.x.x) << ' ' << format_double(r.x.y) << ' '
        << format_double(r.x.z) << ' ' << format_double(r.v.x) << ' '
        << format_double(r.v.y) << ' ' << format_double(r.v.z) << '\n';
  }
}

void write_snapshot_file(const std::string& path, const SnapshotData& snap) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open snapshot file for writing: " + path);
  write_snapshot(out, snap);
  out.flush();
  if (!out) throw ConfigError("failed writing snapshot file: " + path);
}

SnapshotData read_snapshot(std::istream& in) {
  SnapshotData snap;
  std::uint64_t count = 0;
  if (!(in >> count >> snap.box_length.x >> snap.box_length.y >> snap.box_length.z >>
        snap.iteration)) {
    throw ConfigError("snapshot: malformed header (want: natoms Lx Ly Lz iteration)");
  }
  snap.rows.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    auto& r = snap.rows[i];
    if (!(in >> r.id >> r.x.x >> r.x.y >> r.x.z >> r.v.x >> r.v.y >> r.v.z)) {
      throw ConfigError("snapshot: truncated at atom row " + std::to_string(i));
    }
  }
  return snap;
}

SnapshotData read_snapshot_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open snapshot file: " + path);
  return read_snapshot(in);
}

}  // namespace offmd
