#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "offmd/cli.hpp"
#include "offmd/config.hpp"
#include "offmd/lattice.hpp"
#include "offmd/report.hpp"
#include "offmd/scheduler.hpp"
#include "offmd/snapshot.hpp"

using namespace offmd;

namespace {

namespace fs = std::filesystem;

// Scratch output directory wired into the CLI via OFFMD_OUT_DIR.
struct CliDir {
  fs::path path;
  CliDir() {
    path = fs::temp_directory_path() /
           ("offmd_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
    ::setenv("OFFMD_OUT_DIR", path.c_str(), 1);
  }
  ~CliDir() {
    ::unsetenv("OFFMD_OUT_DIR");
    fs::remove_all(path);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
  bool has(const std::string& name) const { return fs::exists(path / name); }
};

int run_cli(std::vector<std::string> args) { return cli_main(args); }

// Small, fast run shared by the artifact tests.
const std::vector<std::string> kTinyRun = {
    "run",     "--cells", "4,4,4", "--n-iterations", "20", "--reneigh-interval", "5",
    "--nodes", "1",       "--quiet"};

std::vector<std::string> with(std::vector<std::string> base,
                              std::initializer_list<std::string> extra) {
  base.insert(base.end(), extra);
  return base;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SnapshotData tiny_snapshot() {
  SimParams p;
  p.unit_cells = {4, 4, 4};
  const AtomStore atoms = create_lattice(p, create_decomposition(p, 1, 0), true);
  SnapshotData snap;
  snap.box_length = GlobalBox::from_params(p).length;
  snap.iteration = 0;
  for (std::uint64_t i = 0; i < atoms.n_local; ++i) {
    snap.rows.push_back({atoms.gid[i], atoms.x[i], atoms.v[i]});
  }
  return snap;
}

}  // namespace

TEST_CASE("help and usage exits") {
  CHECK(run_cli({"--help"}) == 0);
  CHECK(run_cli({"help"}) == 0);
  CHECK(run_cli({}) == 2);
}

TEST_CASE("malformed invocations exit with the configuration code") {
  CliDir dir;
  CHECK(run_cli({"teleport"}) == 2);
  CHECK(run_cli({"run", "--bogus-key", "1", "--quiet"}) == 2);
  CHECK(run_cli({"run", "--cells"}) == 2);          // missing value
  CHECK(run_cli({"run", "positional"}) == 2);       // not a flag
  CHECK(run_cli(with(kTinyRun, {"--mode", "turbo"})) == 2);
  CHECK(run_cli(with(kTinyRun, {"--cells", "0,4,4"})) == 2);
  CHECK(run_cli(with(kTinyRun, {"--nodes", "64"})) == 2);  // slabs thinner than the halo
  CHECK(run_cli({"report", "--quiet"}) == 2);       // needs --test/--reference
  CHECK(run_cli({"report", "--test", dir.file("a.csv"), "--reference", dir.file("b.csv"),
                 "--quiet"}) == 2);                 // files absent
  CHECK(run_cli(with(kTinyRun, {"--config", dir.file("absent.cfg")})) == 2);
}

TEST_CASE("run writes thermo and timing tables") {
  CliDir dir;
  REQUIRE(run_cli(kTinyRun) == 0);
  REQUIRE(dir.has("thermo_baseline.csv"));
  REQUIRE(dir.has("timing.csv"));

  const Csv thermo = read_csv_file(dir.file("thermo_baseline.csv"));
  CHECK(thermo.rows.size() == 3);  // iterations 0, 10, 20
  CHECK(thermo_from_csv(thermo).back().iteration == 20);

  const Csv timing = read_csv_file(dir.file("timing.csv"));
  REQUIRE(timing.rows.size() == 1);
  CHECK(timing.rows[0][0] == "baseline");
}

TEST_CASE("artifact path overrides redirect the csv files") {
  CliDir dir;
  REQUIRE(run_cli(with(kTinyRun, {"--thermo-csv", dir.file("t.csv"), "--timing-csv",
                                  dir.file("w.csv")})) == 0);
  CHECK(dir.has("t.csv"));
  CHECK(dir.has("w.csv"));
  CHECK(!dir.has("thermo_baseline.csv"));
  CHECK(!dir.has("timing.csv"));
  CHECK(thermo_from_csv(read_csv_file(dir.file("t.csv"))).back().iteration == 20);

  // Both arms would race for one file; the conflict is rejected up front.
  CHECK(run_cli(with(kTinyRun, {"--mode", "both", "--thermo-csv", dir.file("t.csv")})) == 2);
}

TEST_CASE("a thermo table's provenance header replays the run that wrote it") {
  CliDir dir;
  REQUIRE(run_cli(with(kTinyRun, {"--rng-seed", "1717"})) == 0);
  const std::string first = slurp(dir.file("thermo_baseline.csv"));

  // Library-level replay from the parsed header.
  const RunConfig cfg = config_from_meta(read_csv_file(dir.file("thermo_baseline.csv")));
  CHECK(cfg.params.rng_seed == 1717);
  const SimulationResult again = run_simulation(cfg.params, cfg.setup);
  const auto samples = thermo_from_csv(read_csv_file(dir.file("thermo_baseline.csv")));
  REQUIRE(again.thermo.size() == samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    CHECK(again.thermo[i].temperature == samples[i].temperature);
    CHECK(again.thermo[i].total == samples[i].total);
  }

  // CLI-level replay lands byte-identical output.
  REQUIRE(run_cli(with(kTinyRun, {"--rng-seed", "1717"})) == 0);
  CHECK(slurp(dir.file("thermo_baseline.csv")) == first);
}

TEST_CASE("mode both writes both arms plus a comparison table") {
  CliDir dir;
  REQUIRE(run_cli(with(kTinyRun, {"--mode", "both"})) == 0);
  CHECK(dir.has("thermo_baseline.csv"));
  CHECK(dir.has("thermo_offpath.csv"));
  const Csv timing = read_csv_file(dir.file("timing.csv"));
  REQUIRE(timing.rows.size() == 2);
  CHECK(timing.rows[0][0] == "baseline");
  CHECK(timing.rows[1][0] == "offpath");
  const Csv cmp = read_csv_file(dir.file("comparison.csv"));
  REQUIRE(cmp.rows.size() == 1);
  CHECK(cmp.columns.front() == "baseline_t_total");
}

TEST_CASE("dump and load round-trip a run") {
  CliDir dir;
  const std::string snap = dir.file("state.snap");
  REQUIRE(run_cli(with(kTinyRun, {"--dump", snap})) == 0);
  REQUIRE(fs::exists(snap));
  const SnapshotData data = read_snapshot_file(snap);
  CHECK(data.rows.size() == 256);
  CHECK(data.iteration == 20);

  CHECK(run_cli(with(kTinyRun, {"--load", snap})) == 0);
  // Resuming across a different node count redistributes the same atoms.
  CHECK(run_cli(with(kTinyRun, {"--load", snap, "--nodes", "2"})) == 0);
}

TEST_CASE("a blown-up state exits with the numerical code") {
  CliDir dir;
  SnapshotData snap = tiny_snapshot();
  snap.rows[1].x = snap.rows[0].x + Vec3{1e-5, 0.0, 0.0};
  const std::string path = dir.file("overlap.snap");
  write_snapshot_file(path, snap);
  CHECK(run_cli(with(kTinyRun, {"--load", path})) == 4);
}

TEST_CASE("config file keys apply with command-line flags winning") {
  CliDir dir;
  const std::string cfg_path = dir.file("run.cfg");
  {
    std::ofstream out(cfg_path);
    out << "cells=4,4,4\nn_iterations=10\nreneigh_interval=5\nnodes=1\n";
  }
  REQUIRE(run_cli({"run", "--config", cfg_path, "--n-iterations", "20", "--quiet"}) == 0);
  const Csv thermo = read_csv_file(dir.file("thermo_baseline.csv"));
  const RunConfig cfg = config_from_meta(thermo);
  CHECK(cfg.params.n_iterations == 20);  // flag overrode the file
  CHECK(cfg.params.reneigh_interval == 5);
  CHECK(thermo_from_csv(thermo).back().iteration == 20);
}

TEST_CASE("sweep covers the requested grid") {
  CliDir dir;
  REQUIRE(run_cli({"sweep", "--cells", "4,4,4", "--n-iterations", "16", "--nodes", "1",
                   "--reneigh-list", "2,4", "--skin-list", "0.3", "--quiet"}) == 0);
  const Csv sweep = read_csv_file(dir.file("sweep.csv"));
  REQUIRE(sweep.rows.size() == 2);
  CHECK(sweep.columns[0] == "cells");
  // Rows carry both arms' totals and the derived improvement.
  for (const auto& row : sweep.rows) {
    CHECK(std::stod(row[4]) > 0.0);
    CHECK(std::stod(row[5]) > 0.0);
  }
}

TEST_CASE("model calibrates, estimates, and measures") {
  CliDir dir;
  REQUIRE(run_cli({"model", "--cells", "4,4,4", "--n-iterations", "60", "--reneigh-interval",
                   "20", "--nodes", "1", "--offload-throttle", "2.0", "--quiet"}) == 0);
  const Csv model = read_csv_file(dir.file("model.csv"));
  REQUIRE(model.rows.size() == 1);
  CHECK(model.rows[0][0] == "1/1/1");
  const double estimate = std::stod(model.rows[0][7]);
  const double measured = std::stod(model.rows[0][8]);
  const double rel_err = std::stod(model.rows[0][9]);
  CHECK(estimate > 0.0);
  CHECK(measured > 0.0);
  CHECK(rel_err >= 0.0);
}

TEST_CASE("report fits the divergence of two thermo tables") {
  CliDir dir;
  REQUIRE(run_cli(kTinyRun) == 0);
  const std::string thermo = dir.file("thermo_baseline.csv");

  // A series against itself diverges at exactly zero: pass, exit 0.
  REQUIRE(run_cli({"report", "--test", thermo, "--reference", thermo, "--quiet"}) == 0);
  REQUIRE(dir.has("tdr.csv"));
  const Csv tdr = read_csv_file(dir.file("tdr.csv"));
  REQUIRE(tdr.rows.size() == 1);
  CHECK(std::stod(tdr.rows[0][0]) == 0.0);
  CHECK(tdr.rows[0].back() == "true");

  // An impossible bound fails the verdict and the exit code says so.
  CHECK(run_cli({"report", "--test", thermo, "--reference", thermo, "--delta", "-1",
                 "--quiet"}) == 1);
}

TEST_CASE("single-worker mesh entry validates its flags before connecting") {
  CliDir dir;
  CHECK(run_cli(with(kTinyRun, {"--peers", "127.0.0.1:1"})) == 2);  // no worker-id
  CHECK(run_cli(with(kTinyRun, {"--peers", "127.0.0.1:1", "--worker-id", "0", "--nodes",
                                "2"})) == 2);  // wrong peer count
  CHECK(run_cli(with(kTinyRun, {"--mode", "both", "--peers", "127.0.0.1:1", "--worker-id",
                                "0"})) == 2);  // both cannot join a mesh
}

TEST_CASE("socket transport forks a local mesh end to end") {
  CliDir dir;
  REQUIRE(run_cli(with(kTinyRun, {"--transport", "socket", "--mode", "offpath"})) == 0);
  CHECK(dir.has("thermo_offpath.csv"));
  const Csv thermo = read_csv_file(dir.file("thermo_offpath.csv"));
  CHECK(thermo_from_csv(thermo).back().iteration == 20);
}
