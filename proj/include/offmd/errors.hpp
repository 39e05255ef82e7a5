#ifndef OFFMD_ERRORS_HPP
#define OFFMD_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace offmd {

// Invalid or inconsistent user configuration (bad parameter values, degenerate
// decompositions, malformed config files).  CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// The host/offload message protocol got out of step: an unexpected payload
// header, a length mismatch, or a peer that went silent mid-protocol.
// CLI exit code 3.
class ProtocolDesyncError : public std::runtime_error {
 public:
  explicit ProtocolDesyncError(const std::string& what) : std::runtime_error(what) {}
};

// The simulation left the numerically meaningful regime: atoms closer than
// the hard floor, non-finite coordinates, or an atom that crossed more than
// one subdomain between rebuilds.  CLI exit code 4.
class NumericalBlowupError : public std::runtime_error {
 public:
  explicit NumericalBlowupError(const std::string& what) : std::runtime_error(what) {}
};

// Transport-level failure (socket error, peer closed, send/recv on a dead
// endpoint).  Distinct from a *protocol* desync: the pipe itself broke.
class TransportError : public std::runtime_error {
 public:
  explicit TransportError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace offmd

#endif
