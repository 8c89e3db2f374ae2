// Adversary model: amplitude law, aim placement, and the geometry that makes
// the injection effective — where the forged data field lands relative to the
// victim's timestamp search window.

#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>

#include "hopguard/adversary.hpp"
#include "hopguard/packet.hpp"
#include "hopguard/rng.hpp"

using namespace hopguard;

TEST(Adversary, AmplitudeLaw) {
  // sir is legitimate-over-attacker: -26 dB means a ~20x stronger attacker
  EXPECT_NEAR(adv::attack_amplitude(1.0, -26.0), std::pow(10.0, 1.3), 1e-12);
  EXPECT_NEAR(adv::attack_amplitude(1.0, 0.0), 1.0, 1e-12);
  EXPECT_NEAR(adv::attack_amplitude(0.5, -20.0), 5.0, 1e-12);
  EXPECT_NEAR(adv::attack_amplitude(1.0, 6.0), std::pow(10.0, -0.3), 1e-12);
}

TEST(Adversary, TransmitOffsetQuantisation) {
  adv::AdversaryConfig cfg;
  cfg.tsy_us = -1.0;
  EXPECT_EQ(cfg.tsy_samples(), -1997);  // -1996.8 samples rounds away from zero
  cfg.tsy_us = 1.5;
  EXPECT_EQ(cfg.tsy_samples(), 2995);
  cfg.tsy_us = 0.0;
  EXPECT_EQ(cfg.tsy_samples(), 0);
  cfg.tsy_us = -0.5;
  EXPECT_EQ(cfg.tsy_samples(), -998);  // -998.4
}

TEST(Adversary, BuildAttackPlacementAndDeterminism) {
  const auto frame = phy::PacketConfig::attacker();
  adv::AdversaryConfig cfg;  // sir -26, tsy -1
  const sample_t predicted = 1 << 20;

  Xoshiro256pp r1(99), r2(99), r3(100);
  const auto w1 = adv::build_attack(frame, predicted, cfg, 1.0, r1);
  const auto w2 = adv::build_attack(frame, predicted, cfg, 1.0, r2);
  const auto w3 = adv::build_attack(frame, predicted, cfg, 1.0, r3);

  EXPECT_EQ(w1.start, predicted + cfg.tsy_samples());
  ASSERT_EQ(w1.pulses.size(), w2.pulses.size());
  for (std::size_t i = 0; i < w1.pulses.size(); ++i) {
    EXPECT_EQ(w1.pulses[i].first, w2.pulses[i].first);
    EXPECT_EQ(w1.pulses[i].second, w2.pulses[i].second);
  }
  // a different stream draws different keystream/payload/carrier
  bool differs = w1.pulses.size() != w3.pulses.size();
  for (std::size_t i = 0; !differs && i < w1.pulses.size(); ++i)
    differs = w1.pulses[i].second != w3.pulses[i].second;
  EXPECT_TRUE(differs);
}

TEST(Adversary, CarrierRotationPreservesPerPulseMagnitude) {
  const auto frame = phy::PacketConfig::attacker();
  adv::AdversaryConfig cfg;
  cfg.sir_db = -20.0;
  Xoshiro256pp rng(7);
  const auto w = adv::build_attack(frame, 0, cfg, 1.0, rng);
  const float want = static_cast<float>(adv::attack_amplitude(1.0, -20.0));
  for (const auto& [off, amp] : w.pulses)
    ASSERT_NEAR(std::abs(amp), want, want * 1e-5f);
}

// The victim's timestamp correlator reads [nominal - btw, nominal + btw]
// plus the 64-chip template span; the attack's densest energy is its data
// field.  At tsy = -1 us the field blankets the window; at tsy = -1.5 us the
// trimmed data gap puts its last chip just short of the window start.  That
// boundary is what the success table's tsy axis hinges on.
TEST(Adversary, DataFieldWindowOverlapGeometry) {
  const auto atk = phy::PacketConfig::attacker();
  const auto victim = phy::PacketConfig::legitimate();
  const int btw = 400;  // receiver default, in samples

  auto overlap_pulses = [&](double tsy_us) {
    adv::AdversaryConfig cfg;
    cfg.tsy_us = tsy_us;
    Xoshiro256pp rng(1);
    const sample_t predicted = 1 << 20;
    const auto w = adv::build_attack(atk, predicted, cfg, 1.0, rng);

    // victim window in absolute samples, template span included
    const sample_t nominal =
        predicted + static_cast<sample_t>(victim.sts_start_chips()) * kSamplesPerChip;
    const sample_t win_lo = nominal - btw;
    const sample_t win_hi = nominal + btw + (victim.sts_chips - 1) * kSamplesPerChip;

    const sample_t data_lo =
        static_cast<sample_t>(atk.data_start_chips()) * kSamplesPerChip;
    int inside = 0;
    for (const auto& [off, amp] : w.pulses) {
      if (off < data_lo) continue;  // only the data field counts
      const sample_t abs_pos = w.start + off;
      if (abs_pos >= win_lo && abs_pos <= win_hi) ++inside;
    }
    return inside;
  };

  EXPECT_GT(overlap_pulses(-1.0), 50);  // dense coverage of the search window
  EXPECT_GT(overlap_pulses(-0.5), 50);
  EXPECT_EQ(overlap_pulses(-1.5), 0);   // one chip short of the window
  EXPECT_EQ(overlap_pulses(-2.0), 0);
}
