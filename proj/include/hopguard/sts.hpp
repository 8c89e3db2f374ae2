// Scrambled timestamp sequence: AES-128 counter-mode keystream mapped to
// +/-1 chips.  Both endpoints derive the sequence from a shared key and a
// 128-bit message counter that advances by one per message (three per
// ranging round), on aborts as well, so the sides never desynchronise.  The
// same counter feeds the hop-delay selection, which is what keeps the random
// reply delays signalling-free.

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "aes128.hpp"
#include "common.hpp"

namespace hopguard::phy {

using StsKey = std::array<std::uint8_t, 16>;

struct Counter128 {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;

  void advance(std::uint64_t n = 1) {
    const std::uint64_t before = lo;
    lo += n;
    if (lo < before) ++hi;
  }

  Counter128 advanced(std::uint64_t n) const {
    Counter128 c = *this;
    c.advance(n);
    return c;
  }

  std::array<std::uint8_t, 16> bytes() const {
    std::array<std::uint8_t, 16> b{};
    for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(lo >> (8 * i));
    for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(8 + i)] = static_cast<std::uint8_t>(hi >> (8 * i));
    return b;
  }

  bool operator==(const Counter128&) const = default;
};

// Keystream chips for one packet.  Multi-block packets fold the block index
// into the high counter word so that message counters striding by 1 can never
// collide with a later block of an earlier message.
inline std::vector<std::int8_t> generate_sts(const StsKey& key, const Counter128& ctr,
                                             int nchips) {
  require(nchips > 0, "generate_sts: nchips must be positive");
  Aes128 aes(key.data());
  std::vector<std::int8_t> chips;
  chips.reserve(static_cast<std::size_t>(nchips));
  for (int block = 0; static_cast<int>(chips.size()) < nchips; ++block) {
    Counter128 in = ctr;
    in.hi ^= static_cast<std::uint64_t>(block) * 0x9E3779B97F4A7C15ull;
    std::uint8_t out[16];
    const auto bytes = in.bytes();
    aes.encrypt(bytes.data(), out);
    for (int i = 0; i < 128 && static_cast<int>(chips.size()) < nchips; ++i) {
      const std::uint8_t byte = out[i / 8];
      const int bit = (byte >> (7 - i % 8)) & 1;  // MSB first
      chips.push_back(bit ? std::int8_t{1} : std::int8_t{-1});
    }
  }
  return chips;
}

}  // namespace hopguard::phy
