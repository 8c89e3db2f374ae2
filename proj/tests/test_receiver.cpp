// Receive chain.  leading_edge is pinned to a brute-force threshold scan;
// the full chain is exercised on noiseless captures (every timestamp exact)
// and at the operating SNR.

#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "hopguard/channel.hpp"
#include "hopguard/receiver.hpp"
#include "hopguard/rng.hpp"
#include "hopguard/sts.hpp"

using namespace hopguard;

namespace {

rx::CirSpectrum make_trace(std::vector<float> mag) {
  rx::CirSpectrum s;
  s.mag = std::move(mag);
  double rms = 0.0;
  for (std::size_t i = 0; i < s.mag.size(); ++i) {
    rms += static_cast<double>(s.mag[i]) * s.mag[i];
    if (s.peak < 0 || s.mag[i] > s.p_max) {
      s.peak = static_cast<int>(i);
      s.p_max = s.mag[i];
    }
  }
  s.p_rms = static_cast<float>(std::sqrt(rms / static_cast<double>(s.mag.size())));
  return s;
}

// Independent scan: earliest bin in [peak - btw, peak] strictly above
// max(mpep * p_max, papr * p_rms), else the peak.
int edge_oracle(const rx::CirSpectrum& s, double mpep, double papr, int btw) {
  const float theta = std::max(static_cast<float>(mpep) * s.p_max,
                               static_cast<float>(papr) * s.p_rms);
  for (int i = std::max(0, s.peak - btw); i <= s.peak; ++i)
    if (s.mag[static_cast<std::size_t>(i)] > theta) return i;
  return s.peak;
}

}  // namespace

TEST(LeadingEdge, EarlyBumpAboveThresholdWins) {
  std::vector<float> mag(600, 0.05f);
  mag[500] = 1.0f;
  mag[300] = 0.6f;
  auto s = make_trace(mag);
  // theta = max(0.5 * 1.0, 2.0 * rms) = 0.5 < 0.6: the early bump is the edge
  EXPECT_EQ(rx::leading_edge(s, 0.5, 2.0, 400), 300);

  mag[300] = 0.4f;  // below threshold: stay on the peak
  s = make_trace(mag);
  EXPECT_EQ(rx::leading_edge(s, 0.5, 2.0, 400), 500);
}

TEST(LeadingEdge, ThresholdIsStrictAndEarliestWins) {
  std::vector<float> mag(600, 0.0f);
  mag[500] = 1.0f;
  mag[300] = 0.5f;  // exactly mpep * peak: not strictly above
  EXPECT_EQ(rx::leading_edge(make_trace(mag), 0.5, 2.0, 400), 500);

  mag[300] = 0.6f;
  mag[200] = 0.55f;  // earlier and also above: earliest one is the edge
  EXPECT_EQ(rx::leading_edge(make_trace(mag), 0.5, 2.0, 400), 200);
}

TEST(LeadingEdge, BacktrackWindowAndNoiseFloorLimit) {
  std::vector<float> mag(600, 0.0f);
  mag[500] = 1.0f;
  mag[50] = 0.9f;  // outside btw = 400 from the peak
  EXPECT_EQ(rx::leading_edge(make_trace(mag), 0.5, 2.0, 400), 500);
  EXPECT_EQ(rx::leading_edge(make_trace(mag), 0.5, 2.0, 599), 50);

  // high floor: papr * rms exceeds the bump, only the peak clears it
  std::vector<float> noisy(600, 0.4f);
  noisy[500] = 1.0f;
  noisy[300] = 0.6f;
  EXPECT_EQ(rx::leading_edge(make_trace(noisy), 0.5, 2.0, 400), 500);
}

TEST(LeadingEdge, GuardsAndFallback) {
  rx::CirSpectrum bad;
  bad.mag = {1.0f, 2.0f};
  bad.peak = -1;
  EXPECT_THROW(rx::leading_edge(bad, 0.5, 2.0, 10), std::invalid_argument);
  bad.peak = 2;
  EXPECT_THROW(rx::leading_edge(bad, 0.5, 2.0, 10), std::invalid_argument);

  // nothing above threshold (mpep close to 1 and flat trace): fall back to peak
  std::vector<float> flat(100, 1.0f);
  const auto s = make_trace(flat);
  EXPECT_EQ(rx::leading_edge(s, 0.99, 4.0, 50), s.peak);
}

TEST(LeadingEdge, AgreesWithBruteForceScan) {
  Xoshiro256pp rng(2024);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = 32 + static_cast<int>(rng.below(512));
    std::vector<float> mag(static_cast<std::size_t>(n));
    for (auto& m : mag) m = static_cast<float>(rng.uniform());
    mag[rng.below(static_cast<std::uint64_t>(n))] = 1.5f;  // unique standout peak
    const auto s = make_trace(mag);
    const double mpep = 0.05 + 0.9 * rng.uniform();
    const double papr = 0.5 + 3.5 * rng.uniform();
    const int btw = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    ASSERT_EQ(rx::leading_edge(s, mpep, papr, btw), edge_oracle(s, mpep, papr, btw))
        << "trial " << trial;
  }
}

namespace {

struct Link {
  phy::PacketConfig cfg = phy::PacketConfig::legitimate();
  phy::StsKey key = {9, 8, 7, 6, 5, 4, 3, 2, 1, 0, 1, 2, 3, 4, 5, 6};
  phy::Counter128 ctr;
  rx::ReceiverConfig rcfg;

  phy::Packet packet(std::vector<std::uint8_t> payload) const {
    return {cfg, std::move(payload), phy::generate_sts(key, ctr, cfg.sts_chips)};
  }

  chan::RxCapture capture(const phy::Waveform& w, sample_t expect, int len,
                          double sigma, std::uint64_t seed) const {
    chan::RxCapture cap(expect - 2048, expect + cfg.packet_samples(len) + 2048, sigma, seed);
    cap.add(w);
    return cap;
  }
};

}  // namespace

TEST(Receiver, NoiselessReceptionIsExact) {
  Link link;
  const sample_t start = 1 << 16;
  const auto pkt = link.packet({0x01});
  const auto w = phy::build_packet(pkt, 1.0, start);
  const auto cap = link.capture(w, start, 1, 0.0, 0);

  const auto res = rx::receive_packet(cap, start, link.cfg, pkt.sts, 1, link.rcfg);
  ASSERT_TRUE(res.detected);
  ASSERT_TRUE(res.crc_ok);
  EXPECT_TRUE(res.valid());
  EXPECT_EQ(res.arrival, start);
  EXPECT_EQ(res.toa, start);  // shoulder calibration backs out the mpep walk-up
  EXPECT_GT(res.sfd_metric, 0.9);
  ASSERT_EQ(res.payload.size(), 1u);
  EXPECT_EQ(res.payload[0], 0x01);
  // first_path sits on the calibrated shoulder of the direct path
  EXPECT_EQ(res.first_path + phy::led_calibration_samples(link.rcfg.mpep),
            start + static_cast<sample_t>(link.cfg.sts_start_chips()) * kSamplesPerChip);
}

TEST(Receiver, FindsPacketOffsetInsideSearchWindow) {
  Link link;
  const sample_t expect = 1 << 16;
  for (sample_t off : {-390ll, -37ll, 53ll, 390ll}) {
    const auto pkt = link.packet({0x5A});
    const auto w = phy::build_packet(pkt, 1.0, expect + off);
    const auto cap = link.capture(w, expect, 1, 0.0, 0);
    const auto res = rx::receive_packet(cap, expect, link.cfg, pkt.sts, 1, link.rcfg);
    ASSERT_TRUE(res.valid()) << "offset " << off;
    EXPECT_EQ(res.toa, expect + off) << "offset " << off;
  }
}

TEST(Receiver, PayloadRoundTripAcrossLengths) {
  Link link;
  const sample_t start = 1 << 16;
  Xoshiro256pp rng(5);
  for (int len : {1, 5, 10, 24}) {
    std::vector<std::uint8_t> payload;
    for (int i = 0; i < len; ++i)
      payload.push_back(static_cast<std::uint8_t>(rng.below(256)));
    const phy::Packet pkt = link.packet(payload);
    const auto w = phy::build_packet(pkt, 1.0, start);
    const auto cap = link.capture(w, start, len, 0.0, 0);
    const auto res = rx::receive_packet(cap, start, link.cfg, pkt.sts, len, link.rcfg);
    ASSERT_TRUE(res.valid()) << "len " << len;
    EXPECT_EQ(res.payload, payload) << "len " << len;
  }
}

TEST(Receiver, OperatingSnrKeepsTimestampsTight) {
  Link link;
  const sample_t start = 1 << 16;
  chan::ChannelConfig ch;  // snr -10 dB
  int valid = 0;
  sample_t worst = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto pkt = link.packet({0x01});
    const auto w = phy::build_packet(pkt, 1.0, start);
    const double sigma = chan::noise_sigma_for(w, ch);
    const auto cap = link.capture(w, start, 1, sigma, seed);
    const auto res = rx::receive_packet(cap, start, link.cfg, pkt.sts, 1, link.rcfg);
    if (!res.valid()) continue;
    ++valid;
    const sample_t err = res.toa > start ? res.toa - start : start - res.toa;
    worst = std::max(worst, err);
  }
  EXPECT_EQ(valid, 20);
  EXPECT_LE(worst, 2);  // within two sample quanta (~0.3 m)
}

TEST(Receiver, WrongKeystreamTemplateFindsNoPath) {
  Link link;
  const sample_t start = 1 << 16;
  const auto pkt = link.packet({0x01});
  const auto w = phy::build_packet(pkt, 1.0, start);
  const auto cap = link.capture(w, start, 1, 0.0, 0);

  const auto good = rx::receive_packet(cap, start, link.cfg, pkt.sts, 1, link.rcfg);
  Xoshiro256pp rng(3);
  std::vector<std::int8_t> wrong(static_cast<std::size_t>(link.cfg.sts_chips));
  for (auto& c : wrong) c = rng.coin() ? 1 : -1;
  const auto bad = rx::receive_packet(cap, start, link.cfg, wrong, 1, link.rcfg);

  ASSERT_TRUE(good.detected);
  ASSERT_TRUE(bad.detected);  // preamble and SFD are code-level, not keyed
  EXPECT_GT(good.cir.p_max, 2.0f * bad.cir.p_max);
}

TEST(Receiver, AttackProfileAloneDoesNotPassSfd) {
  Link link;
  const sample_t start = 1 << 16;
  phy::Packet pkt;
  pkt.cfg = phy::PacketConfig::attacker();
  pkt.payload = {0x77};
  Xoshiro256pp rng(8);
  pkt.sts.assign(static_cast<std::size_t>(pkt.cfg.sts_chips), 1);
  for (auto& c : pkt.sts) c = rng.coin() ? 1 : -1;
  const auto w = phy::build_packet(pkt, 1.0, start);

  chan::RxCapture cap(start - 2048, start + link.cfg.packet_samples(1) + 2048, 0.0, 0);
  cap.add(w);
  const auto tpl = phy::generate_sts(link.key, link.ctr, link.cfg.sts_chips);
  const auto res = rx::receive_packet(cap, start, link.cfg, tpl, 1, link.rcfg);
  EXPECT_FALSE(res.detected);  // different code family: sync despread collapses
}

TEST(Receiver, DataSectionCorruptionKillsCrc) {
  Link link;
  const sample_t start = 1 << 16;
  const auto pkt = link.packet({0x01});
  const auto w = phy::build_packet(pkt, 1.0, start);
  auto cap = link.capture(w, start, 1, 0.0, 0);

  // blanket the data section with strong uncorrelated chips
  phy::Waveform junk;
  junk.start = start + static_cast<sample_t>(link.cfg.data_start_chips()) * kSamplesPerChip;
  Xoshiro256pp rng(17);
  for (int chip = 0; chip < 20 * link.cfg.data_symbol_chips; ++chip)
    junk.pulses.emplace_back(chip * kSamplesPerChip,
                             cfloat{rng.coin() ? 4.0f : -4.0f, 0.0f});
  cap.add(junk);

  const auto res = rx::receive_packet(cap, start, link.cfg, pkt.sts, 1, link.rcfg);
  EXPECT_TRUE(res.detected);
  EXPECT_FALSE(res.crc_ok);
  EXPECT_FALSE(res.valid());
}

TEST(Receiver, InterfaceGuards) {
  Link link;
  const sample_t start = 1 << 16;
  const auto pkt = link.packet({0x01});
  const auto cap = link.capture(phy::build_packet(pkt, 1.0, start), start, 1, 0.0, 0);

  auto short_tpl = pkt.sts;
  short_tpl.pop_back();
  EXPECT_THROW(rx::receive_packet(cap, start, link.cfg, short_tpl, 1, link.rcfg),
               std::invalid_argument);
  EXPECT_THROW(rx::receive_packet(cap, start, link.cfg, pkt.sts, 0, link.rcfg),
               std::invalid_argument);
  EXPECT_THROW(rx::receive_packet(cap, start, link.cfg, pkt.sts, 25, link.rcfg),
               std::invalid_argument);

  rx::ReceiverConfig bad = link.rcfg;
  bad.mpep = 1.5;
  EXPECT_THROW(rx::receive_packet(cap, start, link.cfg, pkt.sts, 1, bad),
               std::invalid_argument);
}
