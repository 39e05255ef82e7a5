#include "offmd/parallel.hpp"

#include <time.h>

#include <algorithm>
#include <chrono>

namespace offmd {

double wall_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

double thread_cpu_seconds() {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return static_cast<double>(ts.tv_sec) + 1e-9 * static_cast<double>(ts.tv_nsec);
}

namespace {

// Chunk c of [0, n) split into `parts` contiguous pieces.
inline std::uint64_t chunk_bound(std::uint64_t n, int parts, int c) {
  return n * static_cast<std::uint64_t>(c) / static_cast<std::uint64_t>(parts);
}

}  // namespace

ThreadPool::ThreadPool(int n_threads)
    : n_threads_(n_threads < 1 ? 1 : n_threads), cpu_used_(n_threads_, 0.0) {
  threads_.reserve(n_threads_ - 1);
  for (int id = 1; id < n_threads_; ++id) {
    threads_.emplace_back([this, id] { worker_main(id); });
  }
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard<std::mutex> lk(mu_);
    shutdown_ = true;
  }
  cv_job_.notify_all();
  for (auto& t : threads_) t.join();
}

void ThreadPool::worker_main(int id) {
  std::uint64_t seen = 0;
  for (;;) {
    const ChunkFn* fn = nullptr;
    std::uint64_t n = 0;
    {
      std::unique_lock<std::mutex> lk(mu_);
      cv_job_.wait(lk, [&] { return shutdown_ || job_seq_ != seen; });
      if (shutdown_) return;
      seen = job_seq_;
      fn = job_fn_;
      n = job_n_;
    }
    const std::uint64_t b = chunk_bound(n, n_threads_, id);
    const std::uint64_t e = chunk_bound(n, n_threads_, id + 1);
    const double c0 = thread_cpu_seconds();
    if (b < e) (*fn)(id, b, e);
    cpu_used_[id] = thread_cpu_seconds() - c0;
    {
      std::lock_guard<std::mutex> lk(mu_);
      if (--pending_ == 0) cv_done_.notify_all();
    }
  }
}

double ThreadPool::parallel_for(std::uint64_t n, const ChunkFn& fn) {
  if (n_threads_ == 1) {
    const double c0 = thread_cpu_seconds();
    if (n > 0) fn(0, 0, n);
    return thread_cpu_seconds() - c0;
  }
  {
    std::lock_guard<std::mutex> lk(mu_);
    job_fn_ = &fn;
    job_n_ = n;
    pending_ = n_threads_ - 1;
    ++job_seq_;
  }
  cv_job_.notify_all();
  const std::uint64_t e0 = chunk_bound(n, n_threads_, 1);
  const double c0 = thread_cpu_seconds();
  if (e0 > 0) fn(0, 0, e0);
  cpu_used_[0] = thread_cpu_seconds() - c0;
  {
    std::unique_lock<std::mutex> lk(mu_);
    cv_done_.wait(lk, [&] { return pending_ == 0; });
  }
  return *std::max_element(cpu_used_.begin(), cpu_used_.end());
}

}  // namespace offmd
