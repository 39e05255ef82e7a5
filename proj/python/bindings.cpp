#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <array>
#include <cstdint>
#include <vector>

#include "offmd/analysis.hpp"
#include "offmd/bench.hpp"
#include "offmd/dynamics.hpp"
#include "offmd/errors.hpp"
#include "offmd/halo.hpp"
#include "offmd/lattice.hpp"
#include "offmd/neighbor.hpp"
#include "offmd/params.hpp"
#include "offmd/scheduler.hpp"
#include "offmd/transport.hpp"

namespace py = pybind11;
using namespace offmd;

namespace {

using Triple = std::array<double, 3>;

Triple to_triple(const Vec3& v) { return {v.x, v.y, v.z}; }
Vec3 to_vec3(const Triple& t) { return Vec3{t[0], t[1], t[2]}; }

std::vector<Triple> to_triples(const std::vector<Vec3>& vs, std::size_t n) {
  std::vector<Triple> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(to_triple(vs[i]));
  return out;
}

// Single-worker pipeline state shared by the lattice/neighbor/force helpers:
// the fully periodic one-node case needs a transport only for self-sends.
struct SingleNode {
  Decomposition decomp;
  InprocFabric fabric{1};
  ThreadPool pool{1};
  AtomStore atoms;
  BorderMap map;

  explicit SingleNode(const SimParams& p) : decomp(create_decomposition(p, 1, 0)) {
    atoms = create_lattice(p, decomp, /*track_ids=*/true);
    Endpoint& ep = fabric.endpoint(0);
    exchange(atoms, decomp, ep, 0);
    map = border(atoms, decomp, p, ep, 0);
  }
};

}  // namespace

PYBIND11_MODULE(_offmd, m) {
  m.doc() = "Distributed Lennard-Jones dynamics with off-path neighbor rebuilds";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ProtocolDesyncError>(m, "ProtocolDesyncError", PyExc_RuntimeError);
  py::register_exception<NumericalBlowupError>(m, "NumericalBlowupError", PyExc_RuntimeError);
  py::register_exception<TransportError>(m, "TransportError", PyExc_RuntimeError);

  py::class_<SimParams>(m, "SimParams")
      .def(py::init<>())
      .def_readwrite("epsilon", &SimParams::epsilon)
      .def_readwrite("sigma", &SimParams::sigma)
      .def_readwrite("r_cut", &SimParams::r_cut)
      .def_readwrite("skin", &SimParams::skin)
      .def_readwrite("dt", &SimParams::dt)
      .def_readwrite("reneigh_interval", &SimParams::reneigh_interval)
      .def_readwrite("sort_interval", &SimParams::sort_interval)
      .def_readwrite("n_iterations", &SimParams::n_iterations)
      .def_readwrite("unit_cells", &SimParams::unit_cells)
      .def_readwrite("density", &SimParams::density)
      .def_readwrite("t_init", &SimParams::t_init)
      .def_readwrite("rng_seed", &SimParams::rng_seed)
      .def_readwrite("min_separation", &SimParams::min_separation)
      .def("total_atoms", &SimParams::total_atoms)
      .def("lattice_constant", &SimParams::lattice_constant)
      .def("validate", &SimParams::validate)
      .def("__repr__", [](const SimParams& p) {
        return "SimParams(cells=" + std::to_string(p.unit_cells[0]) + "," +
               std::to_string(p.unit_cells[1]) + "," + std::to_string(p.unit_cells[2]) +
               ", n_iterations=" + std::to_string(p.n_iterations) + ")";
      });

  py::class_<RunSetup>(m, "RunSetup")
      .def(py::init<>())
      .def_property(
          "mode", [](const RunSetup& s) { return std::string(to_string(s.mode)); },
          [](RunSetup& s, const std::string& name) { s.mode = run_mode_from_string(name); })
      .def_readwrite("n_nodes", &RunSetup::n_nodes)
      .def_readwrite("host_threads", &RunSetup::host_threads)
      .def_readwrite("offload_threads", &RunSetup::offload_threads)
      .def_readwrite("offload_throttle", &RunSetup::offload_throttle)
      .def_readwrite("host_throttle", &RunSetup::host_throttle)
      .def_readwrite("track_ids", &RunSetup::track_ids)
      .def_readwrite("collect_digests", &RunSetup::collect_digests)
      .def_readwrite("sample_interval", &RunSetup::sample_interval)
      .def_readwrite("timeout_s", &RunSetup::timeout_s)
      .def_readwrite("socket_transport", &RunSetup::socket_transport);

  py::class_<ThermoSample>(m, "ThermoSample")
      .def(py::init([](std::uint64_t iteration, double temperature) {
             ThermoSample s;
             s.iteration = iteration;
             s.temperature = temperature;
             return s;
           }),
           py::arg("iteration") = 0, py::arg("temperature") = 0.0)
      .def_readwrite("iteration", &ThermoSample::iteration)
      .def_readwrite("temperature", &ThermoSample::temperature)
      .def_readwrite("kinetic", &ThermoSample::kinetic)
      .def_readwrite("potential", &ThermoSample::potential)
      .def_readwrite("total", &ThermoSample::total)
      .def("__repr__", [](const ThermoSample& s) {
        return "ThermoSample(iteration=" + std::to_string(s.iteration) +
               ", temperature=" + std::to_string(s.temperature) + ")";
      });

  py::class_<ConservationSample>(m, "ConservationSample")
      .def_readonly("iteration", &ConservationSample::iteration)
      .def_property_readonly(
          "momentum", [](const ConservationSample& s) { return to_triple(s.momentum); })
      .def_readonly("n_atoms", &ConservationSample::n_atoms);

  py::class_<TimingBreakdown>(m, "TimingBreakdown")
      .def_readonly("t_total", &TimingBreakdown::t_total)
      .def_readonly("t_force", &TimingBreakdown::t_force)
      .def_readonly("t_neigh", &TimingBreakdown::t_neigh)
      .def_readonly("t_comm", &TimingBreakdown::t_comm)
      .def_readonly("t_wait", &TimingBreakdown::t_wait)
      .def_readonly("t_other", &TimingBreakdown::t_other);

  py::class_<SimulationResult>(m, "SimulationResult")
      .def_property_readonly(
          "mode", [](const SimulationResult& r) { return std::string(to_string(r.mode)); })
      .def_readonly("n_nodes", &SimulationResult::n_nodes)
      .def_readonly("n_atoms", &SimulationResult::n_atoms)
      .def_readonly("list_builds", &SimulationResult::list_builds)
      .def_readonly("thermo", &SimulationResult::thermo)
      .def_readonly("conservation", &SimulationResult::conservation)
      .def_readonly("digests", &SimulationResult::digests)
      .def_readonly("timing", &SimulationResult::timing);

  py::class_<TdrReport>(m, "TdrReport")
      .def_readonly("alpha", &TdrReport::alpha)
      .def_readonly("beta", &TdrReport::beta)
      .def_readonly("samples", &TdrReport::samples)
      .def_readonly("delta_threshold", &TdrReport::delta_threshold)
      .def_readonly("max_abs_delta", &TdrReport::max_abs_delta)
      .def("passed", &TdrReport::pass)
      .def("__repr__", [](const TdrReport& r) {
        return "TdrReport(alpha=" + std::to_string(r.alpha) + ", beta=" +
               std::to_string(r.beta) + ")";
      });

  py::class_<PerfMeasurement>(m, "PerfMeasurement")
      .def(py::init<>())
      .def_readwrite("p", &PerfMeasurement::p)
      .def_readwrite("h", &PerfMeasurement::h)
      .def_readwrite("b", &PerfMeasurement::b)
      .def_readwrite("host_t_force", &PerfMeasurement::host_t_force)
      .def_readwrite("host_t_neigh", &PerfMeasurement::host_t_neigh)
      .def_readwrite("host_t_comm", &PerfMeasurement::host_t_comm)
      .def_readwrite("off_t_force", &PerfMeasurement::off_t_force)
      .def_readwrite("off_t_comm", &PerfMeasurement::off_t_comm)
      .def_readwrite("host_t_total", &PerfMeasurement::host_t_total)
      .def("label", &PerfMeasurement::label);

  m.def("run", &run_simulation, py::arg("params"), py::arg("setup"),
        py::call_guard<py::gil_scoped_release>(),
        "Run the worker mesh in the configured mode and return node 0's view.");
  m.def(
      "run_baseline",
      [](const SimParams& p, RunSetup s) { return run_baseline(p, s); }, py::arg("params"),
      py::arg("setup") = RunSetup{}, py::call_guard<py::gil_scoped_release>());
  m.def(
      "run_offpath",
      [](const SimParams& p, RunSetup s, bool sync_debug) {
        return run_offpath(p, s, sync_debug);
      },
      py::arg("params"), py::arg("setup") = RunSetup{}, py::arg("sync_debug") = false,
      py::call_guard<py::gil_scoped_release>());

  m.def(
      "create_lattice",
      [](const SimParams& p) {
        p.validate();
        const Decomposition d = create_decomposition(p, 1, 0);
        const AtomStore atoms = create_lattice(p, d, true);
        return py::make_tuple(to_triples(atoms.x, atoms.n_local),
                              to_triples(atoms.v, atoms.n_local), atoms.gid);
      },
      py::arg("params"),
      "Whole-system fcc lattice fill: (positions, velocities, global ids).");

  m.def(
      "wrap_periodic",
      [](const Triple& pos, const Triple& box_length) {
        GlobalBox box{to_vec3(box_length)};
        return to_triple(wrap_periodic(to_vec3(pos), box));
      },
      py::arg("pos"), py::arg("box_length"),
      "Map a point into [0, L) per axis for a periodic box.");

  m.def(
      "neighbor_build",
      [](const SimParams& p) {
        std::uint64_t total = 0;
        std::vector<std::uint64_t> counts;
        {
          py::gil_scoped_release release;
          SingleNode s(p);
          const NeighborList nlist = neighbor_build(s.atoms, p, s.decomp, s.pool, 0);
          total = nlist.total_pairs();
          counts.resize(nlist.start.size() - 1);
          for (std::size_t i = 0; i + 1 < nlist.start.size(); ++i) {
            counts[i] = nlist.start[i + 1] - nlist.start[i];
          }
        }
        return py::make_tuple(total, counts);
      },
      py::arg("params"),
      "Build the neighbor list for the initial lattice: (total entries, per-atom counts).");

  m.def(
      "force_compute",
      [](const SimParams& p) {
        std::vector<Triple> forces;
        double pe = 0.0;
        {
          py::gil_scoped_release release;
          SingleNode s(p);
          const NeighborList nlist = neighbor_build(s.atoms, p, s.decomp, s.pool, 0);
          const ForceResult fr = force_compute(s.atoms, nlist, p, s.pool);
          forces = to_triples(s.atoms.f, s.atoms.n_local);
          pe = fr.potential;
        }
        return py::make_tuple(forces, pe);
      },
      py::arg("params"),
      "Forces and potential energy on the initial lattice: (forces, potential).");

  m.def("compute_temperature", &compute_temperature, py::arg("sum_v2"), py::arg("n_atoms"));
  m.def("compute_tdr", &compute_tdr, py::arg("test"), py::arg("reference"),
        py::arg("delta_threshold"),
        "Fit the temperature gap between two aligned thermo series to alpha*n + beta.");
  m.def("improvement", &improvement, py::arg("baseline_total"), py::arg("offpath_total"));
  m.def(
      "max_comm_offload_improvement",
      [](const TimingBreakdown& b) { return max_comm_offload_improvement(b); },
      py::arg("timing"));
  m.def("estimate_offpath_time", &estimate_offpath_time, py::arg("measurement"),
        py::arg("n_iterations"), py::arg("reneigh_interval"));
  m.def("peak_ratio", &peak_ratio, py::arg("host_peak_per_socket"), py::arg("sockets"),
        py::arg("offload_peak"));
  m.def("measure_for_model", &measure_for_model, py::arg("params"), py::arg("target"),
        py::call_guard<py::gil_scoped_release>());
}
