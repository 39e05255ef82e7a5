#ifndef OFFMD_ANALYSIS_HPP
#define OFFMD_ANALYSIS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "offmd/scheduler.hpp"

namespace offmd {

// T = sum(m |v|^2) / (3 N) with m = 1, k_B = 1.  The 3N normalization (not
// 3N-3) is a fixed convention here; any constant factor cancels in the
// temperature-difference regression below.
double compute_temperature(double sum_v2, std::uint64_t n_atoms);

// Least-squares fit of the temperature gap against iteration number:
// dT(n) = T_test(n) - T_ref(n) ~ alpha * n + beta.  alpha is the temperature
// divergence rate — the accuracy metric of record for the restructured loop.
struct TdrReport {
  double alpha = 0.0;            // temperature drift per iteration
  double beta = 0.0;             // intercept
  std::size_t samples = 0;       // points in the fit
  double delta_threshold = 0.0;  // configured bound on |dT(n)|
  double max_abs_delta = 0.0;    // observed max |dT(n)|

  bool pass() const { return max_abs_delta <= delta_threshold; }
};

// Series must be aligned sample-for-sample (same iterations).  Throws
// ConfigError on misalignment or fewer than 3 samples.
TdrReport compute_tdr(const std::vector<ThermoSample>& test,
                      const std::vector<ThermoSample>& reference,
                      double delta_threshold);

// Fractional runtime gain of the restructured loop: (baseline - offpath) /
// baseline.  Negative when the restructuring loses.
double improvement(double baseline_total, double offpath_total);

// Upper bound, in percent, on what hiding communication alone could ever buy
// for a run with this breakdown: t_comm / t_total * 100.
double max_comm_offload_improvement(const TimingBreakdown& b);

// Per-call routine times measured in the two reference settings: host-only
// (p/h/0) and offload-only (p/0/b), feeding the runtime estimate below.
struct PerfMeasurement {
  int p = 0;  // node pairs
  int h = 0;  // host threads
  int b = 0;  // offload threads
  double host_t_force = 0.0;  // per call, host-only run
  double host_t_neigh = 0.0;
  double host_t_comm = 0.0;   // exchange+border per rebuild, host-only run
  double off_t_force = 0.0;   // per call, offload-only (throttled) run
  double off_t_comm = 0.0;    // communicate per call, offload-only run
  double host_t_total = 0.0;  // whole loop, host-only run

  std::string label() const;  // "p/h/b"
};

// Predicted off-path loop time: start from the host-only total and, for each
// of the (n_iterations / reneigh_interval) rebuild iterations, replace the
// serial force+neigh+comm cost with the slower of the two overlapped sides:
//
//   t_total - { t_f + t_n + t_c - max(t_n + t_c, t_f_off + t_c_off) } * rebuilds
//
// Throws ConfigError when reneigh_interval <= 0.
double estimate_offpath_time(const PerfMeasurement& m, std::uint64_t n_iterations,
                             int reneigh_interval);

// Host-to-offload peak compute ratio: host_peak_per_socket * sockets /
// offload_peak.
double peak_ratio(double host_peak_per_socket, int sockets, double offload_peak);

// Median of an unsorted series (copy taken).  Throws ConfigError when empty.
double median(std::vector<double> values);

}  // namespace offmd

#endif
