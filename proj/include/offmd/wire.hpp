#ifndef OFFMD_WIRE_HPP
#define OFFMD_WIRE_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "offmd/errors.hpp"
#include "offmd/vec3.hpp"

namespace offmd {

// Little-endian buffer builder for message payloads.  Doubles travel as their
// IEEE-754 bit pattern, so values survive transport bitwise.
class WireWriter {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void vec3(const Vec3& v) {
    f64(v.x);
    f64(v.y);
    f64(v.z);
  }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }

  std::size_t size() const { return buf_.size(); }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

// Bounds-checked reader over a received payload.  Truncation means the
// protocol got out of step, so it surfaces as ProtocolDesyncError.
class WireReader {
 public:
  explicit WireReader(const std::vector<std::uint8_t>& buf) : buf_(buf) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  Vec3 vec3() {
    Vec3 v;
    v.x = f64();
    v.y = f64();
    v.z = f64();
    return v;
  }

  std::size_t remaining() const { return buf_.size() - pos_; }
  bool done() const { return pos_ == buf_.size(); }

  void expect_done() const {
    if (!done()) {
      throw ProtocolDesyncError("payload has " + std::to_string(remaining()) +
                                " unread bytes past the expected end");
    }
  }

 private:
  void need(std::size_t n) const {
    if (buf_.size() - pos_ < n) {
      throw ProtocolDesyncError("payload truncated: need " + std::to_string(n) +
                                " bytes at offset " + std::to_string(pos_) + " of " +
                                std::to_string(buf_.size()));
    }
  }

  const std::vector<std::uint8_t>& buf_;
  std::size_t pos_ = 0;
};

}  // namespace offmd

#endif
