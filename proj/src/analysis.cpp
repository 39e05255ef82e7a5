#include "offmd/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace offmd {

double compute_temperature(double sum_v2, std::uint64_t n_atoms) {
  if (n_atoms == 0) throw ConfigError("temperature of an empty system is undefined");
  return sum_v2 / (3.0 * static_cast<double>(n_atoms));
}

TdrReport compute_tdr(const std::vector<ThermoSample>& test,
                      const std::vector<ThermoSample>& reference,
                      double delta_threshold) {
  if (test.size() != reference.size()) {
    throw ConfigError("temperature series differ in length: " + std::to_string(test.size()) +
                      " vs " + std::to_string(reference.size()));
  }
  if (test.size() < 3) {
    throw ConfigError("temperature-divergence fit needs at least 3 samples, got " +
                      std::to_string(test.size()));
  }

  // Standard least squares over (n_i, dT_i):
  //   alpha = (m*Sxy - Sx*Sy) / (m*Sxx - Sx^2),  beta = (Sy - alpha*Sx) / m.
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  double max_abs = 0.0;
  const double m = static_cast<double>(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (test[i].iteration != reference[i].iteration) {
      throw ConfigError("temperature series misaligned at sample " + std::to_string(i) + ": " +
                        std::to_string(test[i].iteration) + " vs " +
                        std::to_string(reference[i].iteration));
    }
    const double n = static_cast<double>(test[i].iteration);
    const double dT = test[i].temperature - reference[i].temperature;
    sx += n;
    sy += dT;
    sxx += n * n;
    sxy += n * dT;
    max_abs = std::max(max_abs, std::abs(dT));
  }
  const double denom = m * sxx - sx * sx;
  if (denom == 0.0) {
    throw ConfigError("temperature-divergence fit is degenerate (all samples at one iteration)");
  }

  TdrReport rep;
  rep.alpha = (m * sxy - sx * sy) / denom;
  rep.beta = (sy - rep.alpha * sx) / m;
  rep.samples = test.size();
  rep.delta_threshold = delta_threshold;
  rep.max_abs_delta = max_abs;
  return rep;
}

double improvement(double baseline_total, double offpath_total) {
  if (!(baseline_total > 0.0)) throw ConfigError("baseline total time must be positive");
  return (baseline_total - offpath_total) / baseline_total;
}

double max_comm_offload_improvement(const TimingBreakdown& b) {
  if (!(b.t_total > 0.0)) throw ConfigError("timing breakdown has non-positive total time");
  return b.t_comm / b.t_total * 100.0;
}

std::string PerfMeasurement::label() const {
  return std::to_string(p) + "/" + std::to_string(h) + "/" + std::to_string(b);
}

double estimate_offpath_time(const PerfMeasurement& m, std::uint64_t n_iterations,
                             int reneigh_interval) {
  if (reneigh_interval <= 0) throw ConfigError("re-neighboring interval must be positive");
  const double rebuilds =
      static_cast<double>(n_iterations / static_cast<std::uint64_t>(reneigh_interval));
  const double serial_cost = m.host_t_force + m.host_t_neigh + m.host_t_comm;
  const double overlapped = std::max(m.host_t_neigh + m.host_t_comm,
                                     m.off_t_force + m.off_t_comm);
  return m.host_t_total - (serial_cost - overlapped) * rebuilds;
}

double peak_ratio(double host_peak_per_socket, int sockets, double offload_peak) {
  if (!(offload_peak > 0.0)) throw ConfigError("offload peak must be positive");
  if (sockets <= 0) throw ConfigError("socket count must be positive");
  return host_peak_per_socket * static_cast<double>(sockets) / offload_peak;
}

double median(std::vector<double> values) {
  if (values.empty()) throw ConfigError("median of an empty series");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace offmd
