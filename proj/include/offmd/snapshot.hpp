#ifndef OFFMD_SNAPSHOT_HPP
#define OFFMD_SNAPSHOT_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "offmd/params.hpp"
#include "offmd/vec3.hpp"

namespace offmd {

// Whole-system state dump: text header then one "id x y z vx vy vz" line per
// atom.  Doubles are printed with 17 significant digits so a load followed by
// a dump reproduces the file byte for byte.
struct SnapshotData {
  struct Row {
    std::uint64_t id = 0;
    Vec3 x;
    Vec3 v;
  };
  Vec3 box_length;
  std::uint64_t iteration = 0;
  std::vector<Row> rows;
};

void write_snapshot(std::ostream& out, const SnapshotData& snap);
void write_snapshot_file(const std::string& path, const SnapshotData& snap);

// Throws ConfigError on malformed input (bad header, short rows, wrong count).
SnapshotData read_snapshot(std::istream& in);
SnapshotData read_snapshot_file(const std::string& path);

// Exact-round-trip double formatting shared by snapshot and CSV output.
std::string format_double(double v);

}  // namespace offmd

#endif
