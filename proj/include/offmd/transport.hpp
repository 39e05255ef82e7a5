#ifndef OFFMD_TRANSPORT_HPP
#define OFFMD_TRANSPORT_HPP

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "offmd/errors.hpp"

namespace offmd {

// Message classes of the engine protocol.  recv matches on (peer, tag); FIFO
// order holds per ordered (sender, receiver, tag) triple.
enum class Tag : std::uint32_t {
  exchange = 1,     // migrating atom batches
  border = 2,       // ghost-establishment batches
  communicate = 3,  // per-iteration ghost position refresh
  x_snapshot = 4,   // host -> offload: owned positions after initial_integrate
  plan = 5,         // host -> offload: exchange plan + optional permutation
  permutation = 6,  // reserved for standalone permutation payloads
  f_result = 7,     // offload -> host: force array for owned atoms
  nlist = 8,        // host -> offload: neighbor list + border map + counts
  control = 9,      // reductions, digests, handshakes
};

const char* tag_name(Tag t);

struct Message {
  Tag tag = Tag::control;
  std::vector<std::uint8_t> payload;
};

// Reliable point-to-point messaging between the workers of one run.
// Implementations: in-process mailboxes (deterministic tests, default) and
// TCP sockets (real multi-process operation).  Both deliver FIFO per
// (sender, receiver, tag) and match receives on (peer, tag).
class Endpoint {
 public:
  virtual ~Endpoint() = default;

  virtual int self() const = 0;
  virtual int n_workers() const = 0;

  // Buffered, non-blocking: enqueues and returns.  A worker may send to
  // itself (periodic self-images in single-node axes).
  virtual void send(int peer, Tag tag, std::vector<std::uint8_t> payload) = 0;

  // Blocks until a message with this (peer, tag) arrives.  timeout_s < 0
  // blocks forever; on timeout or a dead peer throws TransportError.
  virtual Message recv(int peer, Tag tag, double timeout_s = -1.0) = 0;

  // Non-blocking probe-and-take.
  virtual std::optional<Message> try_recv(int peer, Tag tag) = 0;

  // Failure teardown: wake every peer blocked on this worker so an exception
  // in one worker unwinds the whole run instead of deadlocking it.  Peers see
  // TransportError on their pending receives from this worker.
  virtual void poison() {}
};

// Shared mailbox machinery: keyed FIFO queues + blocking receive.  Transport
// implementations push inbound messages via deliver().
class MailboxEndpoint : public Endpoint {
 public:
  MailboxEndpoint(int self, int n_workers) : self_(self), n_workers_(n_workers) {}

  int self() const override { return self_; }
  int n_workers() const override { return n_workers_; }

  Message recv(int peer, Tag tag, double timeout_s) override;
  std::optional<Message> try_recv(int peer, Tag tag) override;

  void deliver(int from, Tag tag, std::vector<std::uint8_t> payload);
  void mark_peer_dead(int peer);

 protected:
  static std::uint64_t key(int peer, Tag tag) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(peer)) << 32) |
           static_cast<std::uint32_t>(tag);
  }

  int self_;
  int n_workers_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::uint64_t, std::deque<std::vector<std::uint8_t>>> queues_;
  std::vector<int> dead_peers_;
};

// In-process transport: one fabric per run, one endpoint per worker thread.
class InprocFabric {
 public:
  explicit InprocFabric(int n_workers);
  ~InprocFabric();

  Endpoint& endpoint(int worker);

 private:
  struct Node;
  std::vector<std::unique_ptr<Node>> nodes_;
};

// Emulates a slower offload processor: after each compute kernel call the
// caller reports the kernel's measured CPU time and the throttle sleeps
// (factor - 1) x that, stretching effective kernel latency by `factor`.
class Throttle {
 public:
  Throttle() = default;
  explicit Throttle(double factor);

  double factor() const { return factor_; }
  bool active() const { return factor_ > 1.0; }

  void pay(double kernel_seconds) const;

 private:
  double factor_ = 1.0;
};

}  // namespace offmd

#endif
