#ifndef OFFMD_SOCKET_TRANSPORT_HPP
#define OFFMD_SOCKET_TRANSPORT_HPP

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "offmd/transport.hpp"

namespace offmd {

// TCP-mesh transport: one connection per worker pair, one reader and one
// writer thread per connection.  Frames are [u32 tag][u32 length][payload],
// little-endian, preceded on each fresh connection by an 8-byte hello
// identifying the sender's worker id.  TCP gives the per-(peer, tag) FIFO
// guarantee; writer threads make send() non-blocking so symmetric
// send-then-receive phases cannot deadlock on full kernel buffers.
class SocketFabric {
 public:
  // All-in-one-process mesh over ephemeral localhost ports (tests, and the
  // thread-backed socket demo mode).
  static std::vector<std::unique_ptr<Endpoint>> local_mesh(int n_workers);

  // Join a multi-process mesh.  addrs[i] = "host:port" where worker i
  // listens; every worker binds its own entry, connects to all lower ids,
  // and accepts from all higher ids.
  static std::unique_ptr<Endpoint> connect_mesh(int self,
                                                const std::vector<std::string>& addrs,
                                                double timeout_s = 30.0);

  // Building blocks for launchers that bind before spawning workers (e.g.
  // fork-based local multi-process runs, where ephemeral ports must be known
  // to every child).  bind_local returns a listening fd plus its
  // "127.0.0.1:port" address; establish_mesh completes the mesh from an
  // already-listening fd (and takes ownership of it).
  static std::pair<int, std::string> bind_local();
  static std::unique_ptr<Endpoint> establish_mesh(int self, int listen_fd,
                                                  const std::vector<std::string>& addrs,
                                                  double timeout_s = 30.0);
};

}  // namespace offmd

#endif
