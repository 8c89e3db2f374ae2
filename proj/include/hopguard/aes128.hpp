// Minimal AES-128, encrypt-only, byte-oriented.
//
// Used as the keystream primitive for the scrambled timestamp sequence and
// for the counter-derived hop schedule.  Throughput is irrelevant here (a
// handful of blocks per ranging round), so this favours an obviously-correct
// portable implementation over T-tables or AES-NI.  The S-box is generated
// at compile time from the GF(2^8) inverse + affine map rather than
// transcribed; the FIPS-197 vector in the test suite pins the whole thing.

#pragma once

#include <array>
#include <cstdint>

namespace hopguard {

namespace aes_detail {

constexpr std::uint8_t gmul(std::uint8_t a, std::uint8_t b) {
  std::uint8_t p = 0;
  for (int i = 0; i < 8; ++i) {
    if (b & 1) p ^= a;
    const bool hi = a & 0x80;
    a = static_cast<std::uint8_t>(a << 1);
    if (hi) a ^= 0x1B;  // x^8 + x^4 + x^3 + x + 1
    b >>= 1;
  }
  return p;
}

constexpr std::uint8_t ginv(std::uint8_t a) {
  // a^254 == a^-1 in GF(2^8); 0 maps to 0.
  std::uint8_t r = 1;
  for (int i = 0; i < 254; ++i) r = gmul(r, a);
  return r;
}

constexpr std::array<std::uint8_t, 256> make_sbox() {
  std::array<std::uint8_t, 256> box{};
  for (int i = 0; i < 256; ++i) {
    const std::uint8_t inv = ginv(static_cast<std::uint8_t>(i));
    std::uint8_t x = inv;
    std::uint8_t s = inv;
    for (int r = 0; r < 4; ++r) {
      x = static_cast<std::uint8_t>((x << 1) | (x >> 7));
      s ^= x;
    }
    box[static_cast<std::size_t>(i)] = s ^ 0x63;
  }
  return box;
}

inline constexpr std::array<std::uint8_t, 256> kSbox = make_sbox();

}  // namespace aes_detail

class Aes128 {
 public:
  explicit Aes128(const std::uint8_t key[16]) {
    for (int i = 0; i < 16; ++i) rk_[i] = key[i];
    std::uint8_t rcon = 1;
    for (int i = 16; i < 176; i += 4) {
      std::uint8_t t[4] = {rk_[i - 4], rk_[i - 3], rk_[i - 2], rk_[i - 1]};
      if (i % 16 == 0) {
        const std::uint8_t tmp = t[0];
        t[0] = static_cast<std::uint8_t>(aes_detail::kSbox[t[1]] ^ rcon);
        t[1] = aes_detail::kSbox[t[2]];
        t[2] = aes_detail::kSbox[t[3]];
        t[3] = aes_detail::kSbox[tmp];
        rcon = aes_detail::gmul(rcon, 2);
      }
      for (int j = 0; j < 4; ++j) rk_[i + j] = rk_[i - 16 + j] ^ t[j];
    }
  }

  void encrypt(const std::uint8_t in[16], std::uint8_t out[16]) const {
    std::uint8_t s[16];
    for (int i = 0; i < 16; ++i) s[i] = in[i] ^ rk_[i];
    for (int round = 1; round <= 10; ++round) {
      sub_bytes(s);
      shift_rows(s);
      if (round != 10) mix_columns(s);
      for (int i = 0; i < 16; ++i) s[i] ^= rk_[16 * round + i];
    }
    for (int i = 0; i < 16; ++i) out[i] = s[i];
  }

 private:
  static void sub_bytes(std::uint8_t s[16]) {
    for (int i = 0; i < 16; ++i) s[i] = aes_detail::kSbox[s[i]];
  }

  // State is column-major: byte index = 4*col + row.
  static void shift_rows(std::uint8_t s[16]) {
    std::uint8_t t[16];
    for (int c = 0; c < 4; ++c)
      for (int r = 0; r < 4; ++r) t[4 * c + r] = s[4 * ((c + r) % 4) + r];
    for (int i = 0; i < 16; ++i) s[i] = t[i];
  }

  static void mix_columns(std::uint8_t s[16]) {
    using aes_detail::gmul;
    for (int c = 0; c < 4; ++c) {
      std::uint8_t* col = s + 4 * c;
      const std::uint8_t a0 = col[0], a1 = col[1], a2 = col[2], a3 = col[3];
      col[0] = gmul(a0, 2) ^ gmul(a1, 3) ^ a2 ^ a3;
      col[1] = a0 ^ gmul(a1, 2) ^ gmul(a2, 3) ^ a3;
      col[2] = a0 ^ a1 ^ gmul(a2, 2) ^ gmul(a3, 3);
      col[3] = gmul(a0, 3) ^ a1 ^ a2 ^ gmul(a3, 2);
    }
  }

  std::uint8_t rk_[176];
};

}  // namespace hopguard
