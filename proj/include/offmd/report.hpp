#ifndef OFFMD_REPORT_HPP
#define OFFMD_REPORT_HPP

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "offmd/analysis.hpp"
#include "offmd/config.hpp"
#include "offmd/scheduler.hpp"

namespace offmd {

// Canonical output table: '# key=value' provenance lines, a column-name
// line, then comma-separated rows.  Numbers are rendered with 17 significant
// digits, so parse-then-rewrite reproduces a produced file byte for byte.
struct Csv {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

void write_csv(std::ostream& out, const Csv& csv);
void write_csv_file(const std::string& path, const Csv& csv);

// Throws ConfigError on structural problems (no column line, ragged rows).
Csv read_csv(std::istream& in);
Csv read_csv_file(const std::string& path);

// --- Emitters -------------------------------------------------------------

// iteration, temperature, potential, kinetic, total — one row per sample.
Csv thermo_csv(const RunConfig& cfg, const SimulationResult& result);

// One row per run: configuration plus the loop-time breakdown.
Csv timing_csv(const RunConfig& cfg, const SimulationResult& result);
void append_timing_row(Csv& csv, const RunConfig& cfg, const SimulationResult& result);

// alpha, beta, samples, delta_threshold, max_abs_delta, pass.
Csv tdr_csv(const TdrReport& report);

// --- Readers for downstream analysis --------------------------------------

// Rebuilds the thermo series from a thermo CSV (column order independent).
std::vector<ThermoSample> thermo_from_csv(const Csv& csv);

// Rebuilds the run configuration from a provenance header.
RunConfig config_from_meta(const Csv& csv);

}  // namespace offmd

#endif
