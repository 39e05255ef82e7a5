#include "offmd/transport.hpp"

#include <algorithm>
#include <chrono>
#include <string>
#include <thread>

namespace offmd {

const char* tag_name(Tag t) {
  switch (t) {
    case Tag::exchange: return "exchange";
    case Tag::border: return "border";
    case Tag::communicate: return "communicate";
    case Tag::x_snapshot: return "x-snapshot";
    case Tag::plan: return "plan";
    case Tag::permutation: return "permutation";
    case Tag::f_result: return "f-result";
    case Tag::nlist: return "nlist";
    case Tag::control: return "control";
  }
  return "unknown";
}

Message MailboxEndpoint::recv(int peer, Tag tag, double timeout_s) {
  const std::uint64_t k = key(peer, tag);
  std::unique_lock<std::mutex> lk(mu_);
  auto ready = [&] {
    auto it = queues_.find(k);
    if (it != queues_.end() && !it->second.empty()) return true;
    return std::find(dead_peers_.begin(), dead_peers_.end(), peer) != dead_peers_.end();
  };
  if (timeout_s < 0.0) {
    cv_.wait(lk, ready);
  } else {
    if (!cv_.wait_for(lk, std::chrono::duration<double>(timeout_s), ready)) {
      throw TransportError("recv timeout after " + std::to_string(timeout_s) +
                           "s awaiting tag '" + tag_name(tag) + "' from worker " +
                           std::to_string(peer));
    }
  }
  auto it = queues_.find(k);
  if (it == queues_.end() || it->second.empty()) {
    throw TransportError("worker " + std::to_string(peer) +
                         " went away while worker " + std::to_string(self_) +
                         " awaited tag '" + tag_name(tag) + "'");
  }
  Message m;
  m.tag = tag;
  m.payload = std::move(it->second.front());
  it->second.pop_front();
  return m;
}

std::optional<Message> MailboxEndpoint::try_recv(int peer, Tag tag) {
  const std::uint64_t k = key(peer, tag);
  std::lock_guard<std::mutex> lk(mu_);
  auto it = queues_.find(k);
  if (it == queues_.end() || it->second.empty()) return std::nullopt;
  Message m;
  m.tag = tag;
  m.payload = std::move(it->second.front());
  it->second.pop_front();
  return m;
}

void MailboxEndpoint::deliver(int from, Tag tag, std::vector<std::uint8_t> payload) {
  {
    std::lock_guard<std::mutex> lk(mu_);
    queues_[key(from, tag)].push_back(std::move(payload));
  }
  cv_.notify_all();
}

void MailboxEndpoint::mark_peer_dead(int peer) {
  {
    std::lock_guard<std::mutex> lk(mu_);
    dead_peers_.push_back(peer);
  }
  cv_.notify_all();
}

// ---------------------------------------------------------------------------
// In-process fabric

struct InprocFabric::Node : MailboxEndpoint {
  Node(int self, int n, InprocFabric* fab) : MailboxEndpoint(self, n), fabric(fab) {}

  void send(int peer, Tag tag, std::vector<std::uint8_t> payload) override;
  void poison() override;

  InprocFabric* fabric;
};

void InprocFabric::Node::send(int peer, Tag tag, std::vector<std::uint8_t> payload) {
  if (peer < 0 || peer >= n_workers_) {
    throw TransportError("send to nonexistent worker " + std::to_string(peer));
  }
  fabric->nodes_[peer]->deliver(self_, tag, std::move(payload));
}

void InprocFabric::Node::poison() {
  for (auto& node : fabric->nodes_) node->mark_peer_dead(self_);
}

InprocFabric::InprocFabric(int n_workers) {
  nodes_.reserve(n_workers);
  for (int i = 0; i < n_workers; ++i) {
    nodes_.push_back(std::make_unique<Node>(i, n_workers, this));
  }
}

InprocFabric::~InprocFabric() = default;

Endpoint& InprocFabric::endpoint(int worker) { return *nodes_.at(worker); }

// ---------------------------------------------------------------------------
// Throttle

Throttle::Throttle(double factor) : factor_(factor) {
  if (!(factor >= 1.0)) throw ConfigError("throttle factor must be >= 1");
}

void Throttle::pay(double kernel_seconds) const {
  if (factor_ <= 1.0 || kernel_seconds <= 0.0) return;
  std::this_thread::sleep_for(std::chrono::duration<double>((factor_ - 1.0) * kernel_seconds));
}

}  // namespace offmd
