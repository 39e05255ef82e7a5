#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "doctest.h"
#include "offmd/parallel.hpp"
#include "offmd/transport.hpp"
#include "offmd/socket_transport.hpp"
#include "offmd/wire.hpp"

using namespace offmd;

namespace {

std::vector<std::uint8_t> bytes(std::initializer_list<std::uint8_t> v) { return {v}; }

// Run one body per worker over a fresh mesh of the named kind, joining all
// threads before returning; the first exception wins and is rethrown.
void with_mesh(const std::string& kind, int n,
               const std::function<void(Endpoint&, int)>& body) {
  std::unique_ptr<InprocFabric> inproc;
  std::vector<std::unique_ptr<Endpoint>> sockets;
  auto ep = [&](int w) -> Endpoint& {
    return kind == "inproc" ? inproc->endpoint(w) : *sockets[w];
  };
  if (kind == "inproc") {
    inproc = std::make_unique<InprocFabric>(n);
  } else {
    sockets = SocketFabric::local_mesh(n);
  }

  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> threads;
  for (int w = 0; w < n; ++w) {
    threads.emplace_back([&, w] {
      try {
        body(ep(w), w);
      } catch (...) {
        errors[w] = std::current_exception();
        ep(w).poison();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

const char* kKinds[] = {"inproc", "socket"};

}  // namespace

TEST_CASE("transport: basic round trip and payload integrity") {
  for (const char* kind : kKinds) {
    CAPTURE(kind);
    with_mesh(kind, 2, [](Endpoint& ep, int w) {
      CHECK(ep.n_workers() == 2);
      CHECK(ep.self() == w);
      if (w == 0) {
        WireWriter ww;
        ww.u64(0x0123456789ABCDEFull);
        ww.f64(-0.25);
        ep.send(1, Tag::control, ww.take());
        const Message back = ep.recv(1, Tag::control, 10.0);
        CHECK(back.tag == Tag::control);
        WireReader r(back.payload);
        CHECK(r.u64() == 0xFEDCBA9876543210ull);
      } else {
        const Message m = ep.recv(0, Tag::control, 10.0);
        WireReader r(m.payload);
        CHECK(r.u64() == 0x0123456789ABCDEFull);
        CHECK(r.f64() == -0.25);
        WireWriter ww;
        ww.u64(0xFEDCBA9876543210ull);
        ep.send(0, Tag::control, ww.take());
      }
    });
  }
}

TEST_CASE("transport: self-send is delivered") {
  for (const char* kind : kKinds) {
    CAPTURE(kind);
    with_mesh(kind, 1, [](Endpoint& ep, int) {
      ep.send(0, Tag::border, bytes({1, 2, 3}));
      ep.send(0, Tag::border, bytes({4}));
      CHECK(ep.recv(0, Tag::border, 10.0).payload == bytes({1, 2, 3}));
      CHECK(ep.recv(0, Tag::border, 10.0).payload == bytes({4}));
    });
  }
}

TEST_CASE("transport: FIFO per (sender, tag) and matching on (peer, tag)") {
  for (const char* kind : kKinds) {
    CAPTURE(kind);
    with_mesh(kind, 3, [](Endpoint& ep, int w) {
      if (w == 0) {
        // Interleave two tags to worker 2; order must hold per tag.
        for (std::uint8_t k = 0; k < 10; ++k) {
          ep.send(2, Tag::exchange, bytes({k}));
          ep.send(2, Tag::communicate, bytes({static_cast<std::uint8_t>(100 + k)}));
        }
      } else if (w == 1) {
        for (std::uint8_t k = 0; k < 10; ++k) ep.send(2, Tag::exchange, bytes({static_cast<std::uint8_t>(200 + k)}));
      } else {
        // Drain tag by tag and peer by peer: matching must isolate streams.
        for (std::uint8_t k = 0; k < 10; ++k) {
          CHECK(ep.recv(1, Tag::exchange, 10.0).payload == bytes({static_cast<std::uint8_t>(200 + k)}));
        }
        for (std::uint8_t k = 0; k < 10; ++k) {
          CHECK(ep.recv(0, Tag::communicate, 10.0).payload == bytes({static_cast<std::uint8_t>(100 + k)}));
        }
        for (std::uint8_t k = 0; k < 10; ++k) {
          CHECK(ep.recv(0, Tag::exchange, 10.0).payload == bytes({k}));
        }
      }
    });
  }
}

TEST_CASE("transport: try_recv probes without blocking") {
  for (const char* kind : kKinds) {
    CAPTURE(kind);
    with_mesh(kind, 2, [](Endpoint& ep, int w) {
      if (w == 0) {
        CHECK_FALSE(ep.try_recv(1, Tag::control).has_value());
        ep.send(1, Tag::control, bytes({9}));
        const Message m = ep.recv(1, Tag::control, 10.0);  // sync: peer done
        CHECK(m.payload == bytes({1}));
        const auto probed = ep.try_recv(1, Tag::plan);
        REQUIRE(probed.has_value());
        CHECK(probed->payload == bytes({7}));
        CHECK_FALSE(ep.try_recv(1, Tag::plan).has_value());
      } else {
        CHECK(ep.recv(0, Tag::control, 10.0).payload == bytes({9}));
        ep.send(0, Tag::plan, bytes({7}));
        ep.send(0, Tag::control, bytes({1}));
      }
    });
  }
}

TEST_CASE("transport: recv times out with TransportError") {
  for (const char* kind : kKinds) {
    CAPTURE(kind);
    with_mesh(kind, 2, [](Endpoint& ep, int w) {
      if (w == 0) {
        const double t0 = wall_seconds();
        CHECK_THROWS_AS(ep.recv(1, Tag::f_result, 0.05), TransportError);
        CHECK(wall_seconds() - t0 >= 0.04);
        ep.send(1, Tag::control, bytes({0}));  // release the peer
      } else {
        ep.recv(0, Tag::control, 10.0);
      }
    });
  }
}

TEST_CASE("transport: poison wakes a blocked peer") {
  for (const char* kind : kKinds) {
    CAPTURE(kind);
    std::atomic<bool> woke{false};
    try {
      with_mesh(kind, 2, [&](Endpoint& ep, int w) {
        if (w == 0) {
          // Block forever on a message that never comes; the peer's failure
          // must wake us with TransportError rather than deadlock.
          try {
            ep.recv(1, Tag::f_result, 30.0);
          } catch (const TransportError&) {
            woke = true;
            throw;
          }
        } else {
          throw TransportError("synthetic worker failure");
        }
      });
      FAIL("mesh should have propagated the failure");
    } catch (const TransportError&) {
    }
    CHECK(woke.load());
  }
}

TEST_CASE("transport: 16-worker stress keeps FIFO order with no loss") {
  // Every worker sends `rounds` numbered messages to every other worker on
  // two tags; every worker checks sequence numbers from every sender.
  constexpr int W = 16;
  constexpr std::uint32_t rounds = 25;
  for (const char* kind : kKinds) {
    CAPTURE(kind);
    with_mesh(kind, W, [](Endpoint& ep, int w) {
      const Tag tags[2] = {Tag::exchange, Tag::control};
      for (std::uint32_t k = 0; k < rounds; ++k) {
        for (int peer = 0; peer < W; ++peer) {
          if (peer == ep.self()) continue;
          for (const Tag tag : tags) {
            WireWriter ww;
            ww.u32(static_cast<std::uint32_t>(w));
            ww.u32(static_cast<std::uint32_t>(tag));
            ww.u32(k);
            const std::vector<std::uint8_t> filler(64 + (k % 7) * 17,
                                                   static_cast<std::uint8_t>(k));
            ww.bytes(filler.data(), filler.size());
            ep.send(peer, tag, ww.take());
          }
        }
      }
      for (int peer = 0; peer < W; ++peer) {
        if (peer == ep.self()) continue;
        for (const Tag tag : tags) {
          for (std::uint32_t k = 0; k < rounds; ++k) {
            const Message m = ep.recv(peer, tag, 30.0);
            WireReader r(m.payload);
            CHECK(r.u32() == static_cast<std::uint32_t>(peer));
            CHECK(r.u32() == static_cast<std::uint32_t>(tag));
            CHECK(r.u32() == k);  // strict FIFO: k-th message is round k
          }
          CHECK_FALSE(ep.try_recv(peer, tag).has_value());  // no extras
        }
      }
    });
  }
}

TEST_CASE("throttle stretches kernel latency by its factor") {
  ThreadPool pool(1);
  const Throttle none(1.0);
  const Throttle twice(2.0);
  CHECK_FALSE(none.active());
  CHECK(twice.active());
  CHECK(twice.factor() == 2.0);

  // Busy-spin a measurable kernel, then pay the throttle: the pair should
  // take ~factor x the kernel CPU.  Generous bounds keep this robust on a
  // loaded machine.
  const double t0 = wall_seconds();
  double cpu = pool.parallel_for(1, [](int, std::uint64_t, std::uint64_t) {
    const double start = thread_cpu_seconds();
    while (thread_cpu_seconds() - start < 0.05) {
    }
  });
  none.pay(cpu);
  const double base = wall_seconds() - t0;

  const double t1 = wall_seconds();
  cpu = pool.parallel_for(1, [](int, std::uint64_t, std::uint64_t) {
    const double start = thread_cpu_seconds();
    while (thread_cpu_seconds() - start < 0.05) {
    }
  });
  CHECK(cpu >= 0.05);
  twice.pay(cpu);
  const double stretched = wall_seconds() - t1;
  CHECK(stretched > base * 1.5);
  CHECK(stretched < base * 6.0);
}

TEST_CASE("thread pool reports max per-thread CPU and covers the range") {
  ThreadPool pool(3);
  std::vector<std::atomic<int>> hits(100);
  const double cpu = pool.parallel_for(100, [&](int, std::uint64_t b, std::uint64_t e) {
    for (std::uint64_t i = b; i < e; ++i) hits[i].fetch_add(1);
  });
  for (auto& h : hits) CHECK(h.load() == 1);
  CHECK(cpu >= 0.0);

  // Zero-length ranges are legal.
  const double cpu0 = pool.parallel_for(0, [](int, std::uint64_t, std::uint64_t) {});
  CHECK(cpu0 >= 0.0);
}
