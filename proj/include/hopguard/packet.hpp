// Packet structure and construction.
//
// Frame layout in chips from packet start:
//
//   [ preamble: reps x 127-ternary-code symbols, code chips spread L apart ]
//   [ SFD: 8 more symbols, weighted 0,+1,0,-1,+1,0,0,-1                    ]
//   [ gap 128 ][ STS: 64 keystream chips ][ gap 128 ][ data: 24-chip syms  ]
//
// The legitimate profile spreads the code by 4; the attacker profile spreads
// its own code (a different m-sequence pair) by 9 with 24 preamble
// repetitions, which lands its SFD end on the same chip offset (36576) as
// the legitimate packet — that alignment is what lets an injected packet's
// dense data field straddle a victim's timestamp search window at small
// transmit offsets.  The attacker also trims its post-STS gap to 104 chips,
// pulling that field 24 chips earlier relative to the shared anchor.
//
// Data section: one symbol is 24 chips carrying 2 bits — an 8-chip burst at
// position 0 or 12 (first bit) with polarity +/- (second bit).  Bytes are
// PHR (length, ~length) + payload + CRC-16/CCITT-FALSE over PHR and payload.

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "common.hpp"
#include "pulse.hpp"

namespace hopguard::phy {

inline constexpr int kCodeLength = 127;
inline constexpr std::array<std::int8_t, 8> kSfdPattern = {0, 1, 0, -1, 1, 0, 0, -1};
// Phase offset between the two component m-sequences; fixed where the
// periodic autocorrelation sidelobes of the resulting ternary code bottom out.
inline constexpr int kCodePhase = 0;

// Length-127 ternary codes with exactly 64 active chips: one m-sequence gates
// which positions are active, a phase-shifted second m-sequence supplies the
// signs.  Deterministic; both ends table them.  Variant 0 is the network's
// code; variant 1 is a second code from different primitive polynomials, used
// by the attacker profile — two codes from distinct m-sequence families stay
// near-orthogonal at every relative chip offset and spreading, so forged
// preambles cannot capture the victim's sync correlator.  (Reusing variant 0
// at a different spreading does not achieve that: decimation aliases of one
// m-sequence correlate with itself far above the random-code level.)
inline const std::array<std::int8_t, kCodeLength>& preamble_code(int variant = 0) {
  static const auto build = [](unsigned gate_tap, unsigned sign_tap) {
    auto mseq = [](unsigned tap_a, unsigned tap_b) {
      std::array<std::uint8_t, kCodeLength> seq{};
      unsigned state = 1;
      for (int i = 0; i < kCodeLength; ++i) {
        seq[static_cast<std::size_t>(i)] = state & 1u;
        const unsigned fb = ((state >> tap_a) ^ (state >> tap_b)) & 1u;
        state = (state >> 1) | (fb << 6);
      }
      return seq;
    };
    const auto gate = mseq(0, gate_tap);
    const auto sign = mseq(0, sign_tap);
    std::array<std::int8_t, kCodeLength> c{};
    for (int i = 0; i < kCodeLength; ++i) {
      if (!gate[static_cast<std::size_t>(i)]) {
        c[static_cast<std::size_t>(i)] = 0;
      } else {
        const int j = (i + kCodePhase) % kCodeLength;
        c[static_cast<std::size_t>(i)] = sign[static_cast<std::size_t>(j)] ? 1 : -1;
      }
    }
    return c;
  };
  static const std::array<std::int8_t, kCodeLength> codes[2] = {build(3, 1), build(6, 4)};
  require(variant == 0 || variant == 1, "preamble_code: unknown variant");
  return codes[static_cast<std::size_t>(variant)];
}

inline std::uint16_t crc16_ccitt(const std::uint8_t* data, std::size_t n) {
  std::uint16_t crc = 0xFFFF;
  for (std::size_t i = 0; i < n; ++i) {
    crc ^= static_cast<std::uint16_t>(data[i]) << 8;
    for (int b = 0; b < 8; ++b)
      crc = (crc & 0x8000) ? static_cast<std::uint16_t>((crc << 1) ^ 0x1021)
                           : static_cast<std::uint16_t>(crc << 1);
  }
  return crc;
}

struct PacketConfig {
  int preamble_reps = 64;
  int spreading = 4;
  int sts_chips = 64;
  int gap_sts_chips = 128;   // SFD end -> STS
  int gap_data_chips = 128;  // STS end -> data section
  int data_symbol_chips = 24;
  int burst_chips = 8;
  std::array<int, 2> bpm_offsets = {0, 12};
  int payload_capacity = 24;  // bytes
  int code_variant = 0;

  static PacketConfig legitimate() { return PacketConfig{}; }

  static PacketConfig attacker() {
    PacketConfig c;
    c.preamble_reps = 24;
    c.spreading = 9;
    c.gap_data_chips = 104;
    c.code_variant = 1;
    return c;
  }

  int symbol_chips() const { return kCodeLength * spreading; }
  int sfd_start_chips() const { return preamble_reps * symbol_chips(); }
  int sfd_end_chips() const {
    return (preamble_reps + static_cast<int>(kSfdPattern.size())) * symbol_chips();
  }
  int sts_start_chips() const { return sfd_end_chips() + gap_sts_chips; }
  int sts_end_chips() const { return sts_start_chips() + sts_chips; }
  int data_start_chips() const { return sts_end_chips() + gap_data_chips; }
  int data_symbols(int payload_len) const {
    // PHR (2 bytes) + payload + CRC (2 bytes), 2 bits per symbol.
    return (payload_len + 4) * 4;
  }
  int data_end_chips(int payload_len) const {
    return data_start_chips() + data_symbols(payload_len) * data_symbol_chips;
  }
  sample_t packet_samples(int payload_len) const {
    return static_cast<sample_t>(data_end_chips(payload_len)) * kSamplesPerChip;
  }

  void validate() const {
    require(preamble_reps >= 8, "PacketConfig: preamble too short to synchronise");
    require(spreading >= 1 && spreading <= 16, "PacketConfig: spreading out of range");
    require(sts_chips > 0 && sts_chips % 8 == 0, "PacketConfig: sts_chips must be a multiple of 8");
    require(gap_sts_chips >= 4 * 4 && gap_data_chips >= 4 * 4,
            "PacketConfig: gaps must clear the pulse support");
    require(bpm_offsets[0] + burst_chips <= bpm_offsets[1] &&
                bpm_offsets[1] + burst_chips <= data_symbol_chips,
            "PacketConfig: burst does not fit its half-slot");
    require(code_variant == 0 || code_variant == 1, "PacketConfig: unknown code variant");
    require(payload_capacity > 0 && payload_capacity < 256, "PacketConfig: bad payload capacity");
  }
};

struct Packet {
  PacketConfig cfg;
  std::vector<std::uint8_t> payload;       // payload[0] is the message type
  std::vector<std::int8_t> sts;            // +/-1 keystream chips

  void validate() const {
    cfg.validate();
    require(!payload.empty() && static_cast<int>(payload.size()) <= cfg.payload_capacity,
            "Packet: payload length out of range");
    require(static_cast<int>(sts.size()) == cfg.sts_chips, "Packet: STS length mismatch");
  }
};

// Serialised data-section bits: PHR, payload, CRC.  MSB first within bytes.
inline std::vector<std::uint8_t> data_bits(const std::vector<std::uint8_t>& payload) {
  std::vector<std::uint8_t> bytes;
  const std::uint8_t len = static_cast<std::uint8_t>(payload.size());
  bytes.push_back(len);
  bytes.push_back(static_cast<std::uint8_t>(~len));
  bytes.insert(bytes.end(), payload.begin(), payload.end());
  const std::uint16_t crc = crc16_ccitt(bytes.data(), bytes.size());
  bytes.push_back(static_cast<std::uint8_t>(crc >> 8));
  bytes.push_back(static_cast<std::uint8_t>(crc & 0xFF));
  std::vector<std::uint8_t> bits;
  bits.reserve(bytes.size() * 8);
  for (std::uint8_t b : bytes)
    for (int i = 7; i >= 0; --i) bits.push_back((b >> i) & 1);
  return bits;
}

// Shaped pulse train for one packet, amplitude `amp` per pulse, chip 0 at
// sample `start`.
inline Waveform build_packet(const Packet& pkt, double amp, sample_t start = 0) {
  pkt.validate();
  const auto& code = preamble_code(pkt.cfg.code_variant);
  const PacketConfig& cfg = pkt.cfg;
  Waveform w;
  w.start = start;
  const float a = static_cast<float>(amp);

  auto push_chip = [&](int chip, float v) {
    w.pulses.emplace_back(chip * kSamplesPerChip, cfloat{v, 0.0f});
  };

  const int sym = cfg.symbol_chips();
  for (int r = 0; r < cfg.preamble_reps + static_cast<int>(kSfdPattern.size()); ++r) {
    const float weight =
        r < cfg.preamble_reps ? 1.0f : static_cast<float>(kSfdPattern[static_cast<std::size_t>(
                                           r - cfg.preamble_reps)]);
    if (weight == 0.0f) continue;
    for (int k = 0; k < kCodeLength; ++k) {
      const std::int8_t c = code[static_cast<std::size_t>(k)];
      if (c == 0) continue;
      push_chip(r * sym + k * cfg.spreading, a * weight * static_cast<float>(c));
    }
  }

  const int sts0 = cfg.sts_start_chips();
  for (int i = 0; i < cfg.sts_chips; ++i)
    push_chip(sts0 + i, a * static_cast<float>(pkt.sts[static_cast<std::size_t>(i)]));

  const auto bits = data_bits(pkt.payload);
  const int data0 = cfg.data_start_chips();
  for (std::size_t s = 0; 2 * s + 1 < bits.size(); ++s) {
    const int pos = cfg.bpm_offsets[bits[2 * s]];
    const float sign = bits[2 * s + 1] ? -1.0f : 1.0f;
    const int base = data0 + static_cast<int>(s) * cfg.data_symbol_chips + pos;
    for (int cchip = 0; cchip < cfg.burst_chips; ++cchip) push_chip(base + cchip, a * sign);
  }

  return w;
}

// Average transmit power of a waveform over its own duration (per sample,
// with unit-energy pulses).  The channel's noise level is referenced to this.
inline double average_power(const Waveform& w) {
  require(!w.pulses.empty(), "average_power: empty waveform");
  double e = 0.0;
  for (const auto& [off, amp] : w.pulses) e += std::norm(amp);
  const auto span = static_cast<double>(w.last_sample() - w.first_sample() + 1);
  return e / span;
}

}  // namespace hopguard::phy
