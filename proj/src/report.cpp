#include "offmd/report.hpp"

#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "offmd/snapshot.hpp"

namespace offmd {
namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t next = line.find(',', pos);
    if (next == std::string::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
}

double cell_double(const Csv& csv, const std::vector<std::string>& row, const char* col) {
  for (std::size_t c = 0; c < csv.columns.size(); ++c) {
    if (csv.columns[c] == col) {
      char* end = nullptr;
      const double v = std::strtod(row[c].c_str(), &end);
      if (end == row[c].c_str()) {
        throw ConfigError("CSV cell '" + row[c] + "' in column '" + col + "' is not a number");
      }
      return v;
    }
  }
  throw ConfigError("CSV lacks column '" + std::string(col) + "'");
}

}  // namespace

void write_csv(std::ostream& out, const Csv& csv) {
  for (const auto& [k, v] : csv.meta) out << "# " << k << "=" << v << "\n";
  for (std::size_t c = 0; c < csv.columns.size(); ++c) {
    if (c) out << ",";
    out << csv.columns[c];
  }
  out << "\n";
  for (const auto& row : csv.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ",";
      out << row[c];
    }
    out << "\n";
  }
}

void write_csv_file(const std::string& path, const Csv& csv) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  write_csv(out, csv);
  if (!out) throw ConfigError("write to '" + path + "' failed");
}

Csv read_csv(std::istream& in) {
  Csv csv;
  std::string line;
  bool have_columns = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_columns) {
      if (line.rfind("# ", 0) == 0) {
        const std::size_t eq = line.find('=', 2);
        if (eq == std::string::npos) {
          throw ConfigError("malformed provenance line '" + line + "'");
        }
        csv.meta.emplace_back(line.substr(2, eq - 2), line.substr(eq + 1));
        continue;
      }
      csv.columns = split_commas(line);
      have_columns = true;
      continue;
    }
    if (line.empty()) continue;
    auto row = split_commas(line);
    if (row.size() != csv.columns.size()) {
      throw ConfigError("CSV row has " + std::to_string(row.size()) + " cells, expected " +
                        std::to_string(csv.columns.size()));
    }
    csv.rows.push_back(std::move(row));
  }
  if (!have_columns) throw ConfigError("CSV has no column header line");
  return csv;
}

Csv read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return read_csv(in);
}

Csv thermo_csv(const RunConfig& cfg, const SimulationResult& result) {
  Csv csv;
  csv.meta = config_kv(cfg);
  csv.meta.emplace_back("n_atoms", std::to_string(result.n_atoms));
  csv.columns = {"iteration", "temperature", "potential", "kinetic", "total"};
  for (const auto& s : result.thermo) {
    csv.rows.push_back({std::to_string(s.iteration), format_double(s.temperature),
                        format_double(s.potential), format_double(s.kinetic),
                        format_double(s.total)});
  }
  return csv;
}

Csv timing_csv(const RunConfig& cfg, const SimulationResult& result) {
  Csv csv;
  csv.meta = config_kv(cfg);
  csv.columns = {"mode",       "nodes",   "host_threads", "offload_threads",
                 "offload_throttle", "n_atoms", "t_total",      "t_force",
                 "t_neigh",    "t_comm",  "t_wait",       "t_other"};
  append_timing_row(csv, cfg, result);
  return csv;
}

void append_timing_row(Csv& csv, const RunConfig& cfg, const SimulationResult& result) {
  const TimingBreakdown& t = result.timing;
  csv.rows.push_back({to_string(result.mode), std::to_string(result.n_nodes),
                      std::to_string(cfg.setup.host_threads),
                      std::to_string(cfg.setup.offload_threads),
                      format_double(cfg.setup.offload_throttle), std::to_string(result.n_atoms),
                      format_double(t.t_total), format_double(t.t_force),
                      format_double(t.t_neigh), format_double(t.t_comm),
                      format_double(t.t_wait), format_double(t.t_other)});
}

Csv tdr_csv(const TdrReport& report) {
  Csv csv;
  csv.columns = {"alpha", "beta", "samples", "delta_threshold", "max_abs_delta", "pass"};
  csv.rows.push_back({format_double(report.alpha), format_double(report.beta),
                      std::to_string(report.samples), format_double(report.delta_threshold),
                      format_double(report.max_abs_delta), report.pass() ? "true" : "false"});
  return csv;
}

std::vector<ThermoSample> thermo_from_csv(const Csv& csv) {
  std::vector<ThermoSample> out;
  out.reserve(csv.rows.size());
  for (const auto& row : csv.rows) {
    ThermoSample s;
    s.iteration = static_cast<std::uint64_t>(cell_double(csv, row, "iteration"));
    s.temperature = cell_double(csv, row, "temperature");
    s.potential = cell_double(csv, row, "potential");
    s.kinetic = cell_double(csv, row, "kinetic");
    s.total = cell_double(csv, row, "total");
    out.push_back(s);
  }
  return out;
}

RunConfig config_from_meta(const Csv& csv) {
  RunConfig cfg;
  for (const auto& [k, v] : csv.meta) {
    if (k == "n_atoms") continue;  // derived, informational
    config_apply(cfg, k, v);
  }
  return cfg;
}

}  // namespace offmd
