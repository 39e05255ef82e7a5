#ifndef OFFMD_PARALLEL_HPP
#define OFFMD_PARALLEL_HPP

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace offmd {

// Monotonic wall clock, seconds.
double wall_seconds();

// CPU time consumed by the calling thread, seconds.
double thread_cpu_seconds();

// Fixed-size pool for the per-worker compute kernels.  parallel_for splits an
// index range into one contiguous chunk per thread, so per-atom work (and
// therefore per-atom force accumulation order) is identical for every thread
// count — results stay bitwise reproducible.
//
// parallel_for returns the maximum per-thread CPU time spent in the body.
// The offload throttle uses that as its time base: unlike wall time it is
// unaffected by timeslicing against other workers, and on an otherwise idle
// machine the two coincide.
class ThreadPool {
 public:
  explicit ThreadPool(int n_threads);
  ~ThreadPool();

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  int size() const { return n_threads_; }

  using ChunkFn = std::function<void(int chunk, std::uint64_t begin, std::uint64_t end)>;
  double parallel_for(std::uint64_t n, const ChunkFn& fn);

 private:
  void worker_main(int id);

  int n_threads_;
  std::vector<std::thread> threads_;
  std::mutex mu_;
  std::condition_variable cv_job_;
  std::condition_variable cv_done_;
  std::uint64_t job_seq_ = 0;
  int pending_ = 0;
  bool shutdown_ = false;
  const ChunkFn* job_fn_ = nullptr;
  std::uint64_t job_n_ = 0;
  std::vector<double> cpu_used_;
};

}  // namespace offmd

#endif
