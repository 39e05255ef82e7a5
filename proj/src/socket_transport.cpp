#include "offmd/socket_transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>
#include <thread>

#include "offmd/parallel.hpp"

namespace offmd {
namespace {

constexpr std::uint32_t kHelloMagic = 0x4F464D44;  // "OFMD"
constexpr std::uint32_t kMaxFrame = 1u << 30;

void put_u32(std::uint8_t* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

bool read_exact(int fd, void* buf, std::size_t n) {
  auto* p = static_cast<std::uint8_t*>(buf);
  while (n > 0) {
    const ssize_t r = ::read(fd, p, n);
    if (r == 0) return false;  // orderly EOF
    if (r < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    p += r;
    n -= static_cast<std::size_t>(r);
  }
  return true;
}

bool write_exact(int fd, const void* buf, std::size_t n) {
  const auto* p = static_cast<const std::uint8_t*>(buf);
  while (n > 0) {
    const ssize_t r = ::write(fd, p, n);
    if (r < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    p += r;
    n -= static_cast<std::size_t>(r);
  }
  return true;
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

struct Addr {
  std::string host;
  std::uint16_t port;
};

Addr parse_addr(const std::string& s) {
  const auto pos = s.rfind(':');
  if (pos == std::string::npos) throw ConfigError("peer address needs host:port, got '" + s + "'");
  Addr a;
  a.host = s.substr(0, pos);
  const long p = std::strtol(s.c_str() + pos + 1, nullptr, 10);
  if (p <= 0 || p > 65535) throw ConfigError("bad port in peer address '" + s + "'");
  a.port = static_cast<std::uint16_t>(p);
  return a;
}

int listen_on(std::uint16_t port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw TransportError("socket(): " + std::string(std::strerror(errno)));
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_addr.s_addr = htonl(INADDR_ANY);
  sa.sin_port = htons(port);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&sa), sizeof sa) < 0) {
    const std::string err = std::strerror(errno);
    ::close(fd);
    throw TransportError("bind(port " + std::to_string(port) + "): " + err);
  }
  if (::listen(fd, 64) < 0) {
    const std::string err = std::strerror(errno);
    ::close(fd);
    throw TransportError("listen(): " + err);
  }
  return fd;
}

std::uint16_t bound_port(int fd) {
  sockaddr_in sa{};
  socklen_t len = sizeof sa;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&sa), &len);
  return ntohs(sa.sin_port);
}

int connect_with_retry(const Addr& addr, double timeout_s) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  const double deadline = wall_seconds() + timeout_s;
  for (;;) {
    addrinfo* res = nullptr;
    const std::string port_str = std::to_string(addr.port);
    if (getaddrinfo(addr.host.c_str(), port_str.c_str(), &hints, &res) == 0 && res) {
      const int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
      if (fd >= 0) {
        if (::connect(fd, res->ai_addr, res->ai_addrlen) == 0) {
          freeaddrinfo(res);
          set_nodelay(fd);
          return fd;
        }
        ::close(fd);
      }
      freeaddrinfo(res);
    }
    if (wall_seconds() >= deadline) {
      throw TransportError("cannot connect to " + addr.host + ":" + std::to_string(addr.port) +
                           " within " + std::to_string(timeout_s) + "s");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

class SocketEndpoint final : public MailboxEndpoint {
 public:
  SocketEndpoint(int self, int n) : MailboxEndpoint(self, n), conns_(n) {}

  ~SocketEndpoint() override {
    for (auto& c : conns_) {
      if (!c) continue;
      {
        std::lock_guard<std::mutex> lk(c->mu);
        c->closing = true;
      }
      c->cv.notify_all();
      if (c->writer.joinable()) c->writer.join();
      ::shutdown(c->fd, SHUT_RD);
      if (c->reader.joinable()) c->reader.join();
      ::close(c->fd);
    }
  }

  void adopt(int peer, int fd) {
    auto c = std::make_unique<Conn>();
    c->fd = fd;
    c->reader = std::thread([this, peer, fd] { reader_main(peer, fd); });
    Conn* raw = c.get();
    c->writer = std::thread([this, raw] { writer_main(raw); });
    conns_[peer] = std::move(c);
  }

  void poison() override {
    // Slam every connection shut: peers' readers see EOF and mark this
    // worker dead, waking their blocked receives with TransportError.
    for (auto& c : conns_) {
      if (c) ::shutdown(c->fd, SHUT_RDWR);
    }
  }

  void send(int peer, Tag tag, std::vector<std::uint8_t> payload) override {
    if (payload.size() > kMaxFrame) throw TransportError("frame too large");
    if (peer == self_) {
      deliver(self_, tag, std::move(payload));
      return;
    }
    auto& c = conns_.at(peer);
    if (!c) throw TransportError("no connection to worker " + std::to_string(peer));
    std::vector<std::uint8_t> frame(8 + payload.size());
    put_u32(frame.data(), static_cast<std::uint32_t>(tag));
    put_u32(frame.data() + 4, static_cast<std::uint32_t>(payload.size()));
    std::memcpy(frame.data() + 8, payload.data(), payload.size());
    {
      std::lock_guard<std::mutex> lk(c->mu);
      if (c->broken) {
        throw TransportError("connection to worker " + std::to_string(peer) + " is broken");
      }
      c->outbox.push_back(std::move(frame));
    }
    c->cv.notify_all();
  }

 private:
  struct Conn {
    int fd = -1;
    std::thread reader;
    std::thread writer;
    std::mutex mu;
    std::condition_variable cv;
    std::deque<std::vector<std::uint8_t>> outbox;
    bool closing = false;
    bool broken = false;
  };

  void reader_main(int peer, int fd) {
    std::uint8_t hdr[8];
    for (;;) {
      if (!read_exact(fd, hdr, 8)) break;
      const auto tag = static_cast<Tag>(get_u32(hdr));
      const std::uint32_t len = get_u32(hdr + 4);
      if (len > kMaxFrame) break;
      std::vector<std::uint8_t> payload(len);
      if (len > 0 && !read_exact(fd, payload.data(), len)) break;
      deliver(peer, tag, std::move(payload));
    }
    mark_peer_dead(peer);
  }

  void writer_main(Conn* c) {
    for (;;) {
      std::vector<std::uint8_t> frame;
      {
        std::unique_lock<std::mutex> lk(c->mu);
        c->cv.wait(lk, [&] { return c->closing || !c->outbox.empty(); });
        if (c->outbox.empty()) return;  // closing with everything flushed
        frame = std::move(c->outbox.front());
        c->outbox.pop_front();
      }
      if (!write_exact(c->fd, frame.data(), frame.size())) {
        std::lock_guard<std::mutex> lk(c->mu);
        c->broken = true;
        c->outbox.clear();
        if (c->closing) return;
      }
    }
  }

  std::vector<std::unique_ptr<Conn>> conns_;
};

// Bind was done by the caller (so local_mesh can learn ephemeral ports before
// anyone connects); this completes the mesh from an already-listening socket.
std::unique_ptr<Endpoint> establish(int self, int listen_fd,
                                    const std::vector<std::string>& addrs,
                                    double timeout_s) {
  const int n = static_cast<int>(addrs.size());
  auto ep = std::make_unique<SocketEndpoint>(self, n);

  // Deterministic dial direction: higher id connects, lower id accepts.
  std::vector<int> fds(n, -1);
  for (int peer = 0; peer < self; ++peer) {
    const int fd = connect_with_retry(parse_addr(addrs[peer]), timeout_s);
    std::uint8_t hello[8];
    put_u32(hello, kHelloMagic);
    put_u32(hello + 4, static_cast<std::uint32_t>(self));
    if (!write_exact(fd, hello, 8)) {
      ::close(fd);
      throw TransportError("hello write to worker " + std::to_string(peer) + " failed");
    }
    fds[peer] = fd;
  }
  for (int expected = self + 1; expected < n; ++expected) {
    const int fd = ::accept(listen_fd, nullptr, nullptr);
    if (fd < 0) throw TransportError("accept(): " + std::string(std::strerror(errno)));
    set_nodelay(fd);
    std::uint8_t hello[8];
    if (!read_exact(fd, hello, 8) || get_u32(hello) != kHelloMagic) {
      ::close(fd);
      throw TransportError("bad hello from inbound connection");
    }
    const int peer = static_cast<int>(get_u32(hello + 4));
    if (peer <= self || peer >= n || fds[peer] != -1) {
      ::close(fd);
      throw TransportError("hello names invalid worker " + std::to_string(peer));
    }
    fds[peer] = fd;
  }
  ::close(listen_fd);
  for (int peer = 0; peer < n; ++peer) {
    if (peer != self) ep->adopt(peer, fds[peer]);
  }
  return ep;
}

}  // namespace

std::pair<int, std::string> SocketFabric::bind_local() {
  const int fd = listen_on(0);
  return {fd, "127.0.0.1:" + std::to_string(bound_port(fd))};
}

std::unique_ptr<Endpoint> SocketFabric::establish_mesh(int self, int listen_fd,
                                                       const std::vector<std::string>& addrs,
                                                       double timeout_s) {
  return establish(self, listen_fd, addrs, timeout_s);
}

std::vector<std::unique_ptr<Endpoint>> SocketFabric::local_mesh(int n_workers) {
  std::vector<int> listeners(n_workers);
  std::vector<std::string> addrs(n_workers);
  for (int i = 0; i < n_workers; ++i) {
    listeners[i] = listen_on(0);
    addrs[i] = "127.0.0.1:" + std::to_string(bound_port(listeners[i]));
  }
  std::vector<std::unique_ptr<Endpoint>> eps(n_workers);
  std::vector<std::thread> joiners;
  std::mutex err_mu;
  std::string first_error;
  joiners.reserve(n_workers);
  for (int i = 0; i < n_workers; ++i) {
    joiners.emplace_back([&, i] {
      try {
        eps[i] = establish(i, listeners[i], addrs, 30.0);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (first_error.empty()) first_error = e.what();
      }
    });
  }
  for (auto& t : joiners) t.join();
  if (!first_error.empty()) throw TransportError("local mesh setup failed: " + first_error);
  return eps;
}

std::unique_ptr<Endpoint> SocketFabric::connect_mesh(int self,
                                                     const std::vector<std::string>& addrs,
                                                     double timeout_s) {
  if (self < 0 || self >= static_cast<int>(addrs.size())) {
    throw ConfigError("worker id out of range of the peer address list");
  }
  const int listen_fd = listen_on(parse_addr(addrs[self]).port);
  return establish(self, listen_fd, addrs, timeout_s);
}

}  // namespace offmd
