// Ghost-peak adversary.
//
// The attacker has observed the public ranging schedule, so in classic mode
// it can predict the Response transmit time to within the victims' timestamp
// jitter.  It injects its own HRP-alike packet (attacker frame profile:
// spreading 9, short preamble, same gap/STS/data geometry) offset by tsy
// from the packet it shadows.  Its keystream and payload are random — the
// point is not to forge the sequence but to land *dense* data-section energy
// inside the victim's back-track correlation window, where random sign
// agreements against the victim's template manufacture an early ghost edge.
//
// sir_db is the ratio of legitimate to attacker power over their (equally
// dense) timestamp segments, so the attacker's per-pulse amplitude is
// legit_amp * 10^(-sir/20); sir = -26 dB means a 20x stronger attacker.

#pragma once

#include <cstdint>

#include "channel.hpp"
#include "common.hpp"
#include "packet.hpp"
#include "rng.hpp"

namespace hopguard::adv {

struct AdversaryConfig {
  double sir_db = -26.0;
  double tsy_us = -1.0;

  sample_t tsy_samples() const { return us_to_samples(tsy_us); }
};

inline double attack_amplitude(double legit_amp, double sir_db) {
  return legit_amp * db_to_amplitude(-sir_db);
}

// Attack waveform placed so that its chip 0 lands `tsy` after the predicted
// arrival of the packet it shadows.  Payload content and STS are drawn from
// the attacker's own generator.
inline phy::Waveform build_attack(const phy::PacketConfig& frame, sample_t predicted_arrival,
                                  const AdversaryConfig& cfg, double legit_amp,
                                  Xoshiro256pp& rng) {
  phy::Packet pkt;
  pkt.cfg = frame;
  pkt.payload = {static_cast<std::uint8_t>(rng.next() & 0xFF)};
  pkt.sts.resize(static_cast<std::size_t>(frame.sts_chips));
  for (auto& c : pkt.sts) c = rng.coin() ? 1 : -1;
  const double amp = attack_amplitude(legit_amp, cfg.sir_db);
  phy::Waveform w = phy::build_packet(pkt, amp, predicted_arrival + cfg.tsy_samples());
  // Attacker carrier is not phase-locked to the victim link.
  const double phi = 6.283185307179586 * rng.uniform();
  const cfloat rot{static_cast<float>(std::cos(phi)), static_cast<float>(std::sin(phi))};
  for (auto& [off, amp_c] : w.pulses) amp_c *= rot;
  return w;
}

}  // namespace hopguard::adv
