#ifndef OFFMD_BENCH_HPP
#define OFFMD_BENCH_HPP

#include "offmd/analysis.hpp"
#include "offmd/scheduler.hpp"

namespace offmd {

// Calibrates the runtime model for one target configuration by running the
// original (baseline) loop twice and harvesting per-call routine times:
//
//   host-only  (p/h/0): target host thread count, no throttle
//   offload-only (p/0/b): offload thread count, kernels stretched by the
//                         offload throttle — the whole computation as the
//                         slower processor would run it
//
// Medians are taken per routine.  The offload communicate cost comes from
// the non-rebuild halo refreshes; when the target interval is 1 the loop has
// none, so a short auxiliary run at interval 2 supplies them (kernel and
// refresh costs do not depend on the rebuild cadence).
//
// Digests and id tracking are disabled in these runs: both add work that the
// benchmarked loop would not do.
//
// Throws ConfigError when params.n_iterations < 50 (medians would not be
// stable) or when the loop contains no rebuild to measure.
PerfMeasurement measure_for_model(const SimParams& params, const RunSetup& target);

}  // namespace offmd

#endif
