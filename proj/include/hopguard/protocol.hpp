// Double-sided two-way ranging with counter-synchronised reply-time hopping.
//
// Message flow (one round):  initiator Poll -> responder Response (after
// reply time R, plus the committed hop delay when hopping) -> initiator
// Final (after R).  Distance comes from the four measured intervals:
//
//     d = c * (Tround1*Tround2 - Treply1*Treply2)
//           / (Tround1 + Tround2 + Treply1 + Treply2)
//
// which cancels clock offsets, and — because the hop delay enters Tround1
// and Treply1 identically — cancels the hop as well.  Both endpoints derive
// the hop delay from the shared AES message counter, so no field of any
// packet announces it: an attacker that could read a committed delay off the
// air would have nothing left to predict.
//
// Message counters advance by exactly three per round on both sides, aborted
// rounds included; that is what keeps keystream templates and hop choices
// aligned without acknowledgements.

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "adversary.hpp"
#include "channel.hpp"
#include "common.hpp"
#include "detection.hpp"
#include "packet.hpp"
#include "receiver.hpp"
#include "rng.hpp"
#include "sts.hpp"

namespace hopguard::proto {

struct DistanceResult {
  double meters = 0.0;
  bool suspicious = false;  // negative time-of-flight numerator
};

// Evaluated in extended precision: the numerator is a difference of products
// of near-equal magnitudes, and double intermediates would lose several
// digits exactly when the estimate approaches zero.
inline DistanceResult compute_distance(double t_round1, double t_reply1, double t_round2,
                                       double t_reply2) {
  const long double r1 = t_round1, p1 = t_reply1, r2 = t_round2, p2 = t_reply2;
  const long double den = r1 + r2 + p1 + p2;
  require(den > 0.0L, "compute_distance: degenerate interval sum");
  const long double num = r1 * r2 - p1 * p2;
  const long double tof = num / den;
  return {static_cast<double>(static_cast<long double>(kSpeedOfLight) * tof), num < 0.0L};
}

struct HopTable {
  std::vector<sample_t> entries;

  // Evenly spaced delays over [min_us, max_us].  Every entry must exceed the
  // span an injected packet could still straddle (payload end minus SFD end
  // of the reference frame), otherwise a hop could leave the old position
  // inside the attacker's aim window.
  static HopTable uniform(double min_us = 15.0, double max_us = 20.0, int n = 32,
                          const phy::PacketConfig& ref = phy::PacketConfig::legitimate()) {
    require(n >= 2, "HopTable: need at least two entries");
    require(max_us > min_us, "HopTable: empty span");
    const double vulnerable_us =
        (ref.data_end_chips(ref.payload_capacity) - ref.sfd_end_chips()) / kChipRateHz * 1e6;
    require(min_us > vulnerable_us, "HopTable: delays must clear the vulnerable span");
    HopTable t;
    t.entries.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      t.entries.push_back(us_to_samples(min_us + (max_us - min_us) * i / (n - 1)));
    for (std::size_t i = 1; i < t.entries.size(); ++i)
      require(t.entries[i] > t.entries[i - 1], "HopTable: entries must be strictly increasing");
    return t;
  }
};

// Both sides call this with the Response-message counter; identical inputs,
// identical commitment.
inline sample_t select_hop_delay(const HopTable& table, const phy::Counter128& ctr) {
  require(!table.entries.empty(), "select_hop_delay: empty table");
  const auto bytes = ctr.bytes();
  const std::uint64_t h = fnv1a64(bytes.data(), bytes.size());
  return table.entries[static_cast<std::size_t>(h % table.entries.size())];
}

enum class Mode { classic, hop };

struct Scenario {
  double distance_m = 10.0;
  double snr_db = -10.0;
  double reply_us = 300.0;
  double channel_gain = 1.0;
  phy::PacketConfig frame = phy::PacketConfig::legitimate();
  phy::PacketConfig attack_frame = phy::PacketConfig::attacker();
  rx::ReceiverConfig rcfg;
  HopTable hops = HopTable::uniform();
  phy::StsKey key = {0x8A, 0x2E, 0x5C, 0x11, 0x07, 0xD3, 0x49, 0xB6,
                     0x6F, 0x90, 0x3B, 0xE8, 0x24, 0xC7, 0x5D, 0x02};
  double detect_gamma = detect::kDefaultGamma;
};

struct RoundResult {
  bool completed = false;
  int aborted_at = -1;        // 0 Poll, 1 Response, 2 Final; -1 completed
  double d_hat = 0.0;
  bool suspicious = false;
  int flagged = 0;            // responder's channel-mismatch verdict
  sample_t hop_responder = 0; // committed hop delays, one per endpoint
  sample_t hop_initiator = 0;
  sample_t ghost_shift = 0;   // samples the Response edge moved early (diagnostic)
};

// Optional per-round diagnostics (CIR dump and session-trace interface).
struct RoundDebug {
  rx::ReceiveResult poll;      // responder's receptions
  rx::ReceiveResult final;
  rx::ReceiveResult response;  // initiator's reception
  sample_t poll_tx = 0;        // transmit epochs on the shared sample clock
  sample_t resp_tx = 0;
  sample_t final_tx = 0;
};

inline RoundResult run_round(const Scenario& sc, Mode mode, const adv::AdversaryConfig* atk,
                             std::uint64_t seed, const phy::Counter128& round_ctr,
                             RoundDebug* dbg = nullptr) {
  Xoshiro256pp rng(seed);
  RoundResult out;

  const chan::ChannelConfig ch{sc.distance_m, sc.channel_gain, sc.snr_db};
  const sample_t tof = ch.delay_samples();
  const sample_t reply = us_to_samples(sc.reply_us);
  const phy::Counter128 c_poll = round_ctr;
  const phy::Counter128 c_resp = round_ctr.advanced(1);
  const phy::Counter128 c_final = round_ctr.advanced(2);

  out.hop_responder = mode == Mode::hop ? select_hop_delay(sc.hops, c_resp) : 0;
  out.hop_initiator = out.hop_responder == 0 ? 0 : select_hop_delay(sc.hops, c_resp);
  const sample_t dt = out.hop_responder;

  const double two_pi = 6.283185307179586;
  const sample_t margin = 2048;
  const sample_t poll_tx = sample_t{1} << 17;

  auto make_capture = [&](sample_t expect, int payload_len, const phy::Waveform& legit) {
    chan::RxCapture cap(expect - margin, expect + sc.frame.packet_samples(payload_len) + margin,
                        chan::noise_sigma_for(legit, ch), rng.next());
    cap.add(legit);
    return cap;
  };

  // ---- Poll: initiator -> responder
  if (dbg) dbg->poll_tx = poll_tx;
  phy::Packet poll{sc.frame, {0x01}, phy::generate_sts(sc.key, c_poll, sc.frame.sts_chips)};
  const phy::Waveform poll_rx_wf =
      chan::propagate(phy::build_packet(poll, 1.0, poll_tx), ch, two_pi * rng.uniform());
  const sample_t expect_poll = poll_tx + tof;
  chan::RxCapture cap_poll = make_capture(expect_poll, 1, poll_rx_wf);
  const rx::ReceiveResult rx_poll =
      rx::receive_packet(cap_poll, expect_poll, sc.frame, poll.sts, 1, sc.rcfg);
  if (dbg) dbg->poll = rx_poll;
  if (!rx_poll.valid() || rx_poll.payload[0] != 0x01) {
    out.aborted_at = 0;
    return out;
  }

  // ---- Response: responder -> initiator (hop applies here)
  const sample_t resp_tx = rx_poll.toa + reply + dt;
  if (dbg) dbg->resp_tx = resp_tx;
  // The Response carries a session salt after the type byte.  Its length is a
  // protocol decision with a physical side: the data section is the only
  // CRC-protected surface behind the timestamp sequence, so it has to be long
  // enough that energy injected anywhere behind the back-track window still
  // lands on chips the CRC covers.
  std::vector<std::uint8_t> resp_payload{0x02};
  for (int i = 0; i < 9; ++i)
    resp_payload.push_back(static_cast<std::uint8_t>(rng.below(256)));
  phy::Packet resp{sc.frame, resp_payload, phy::generate_sts(sc.key, c_resp, sc.frame.sts_chips)};
  const int resp_len = static_cast<int>(resp_payload.size());
  const phy::Waveform resp_rx_wf =
      chan::propagate(phy::build_packet(resp, 1.0, resp_tx), ch, two_pi * rng.uniform());
  const sample_t expect_resp = poll_tx + 2 * tof + reply + dt;
  chan::RxCapture cap_resp = make_capture(expect_resp, resp_len, resp_rx_wf);
  if (atk) {
    // The attacker predicts from the public schedule; it cannot see the
    // counter-committed hop, so its aim is the no-hop arrival time.
    const sample_t predicted = poll_tx + 2 * tof + reply;
    chan::inject(cap_resp,
                 adv::build_attack(sc.attack_frame, predicted, *atk, sc.channel_gain, rng));
  }
  const rx::ReceiveResult rx_resp =
      rx::receive_packet(cap_resp, expect_resp, sc.frame, resp.sts, resp_len, sc.rcfg);
  if (dbg) dbg->response = rx_resp;
  if (!rx_resp.valid() || rx_resp.payload[0] != 0x02) {
    out.aborted_at = 1;
    return out;
  }
  out.ghost_shift = (resp_tx + tof) - rx_resp.toa;  // >0: reported edge came early

  // ---- Final: initiator -> responder, carrying the initiator's CIR feature
  const sample_t final_tx = rx_resp.toa + reply;
  if (dbg) dbg->final_tx = final_tx;
  const detect::CirFeature feat_init = detect::extract_feature(rx_resp.cir, rx_resp.first_path);
  std::vector<std::uint8_t> final_payload;
  final_payload.push_back(0x03);
  final_payload.insert(final_payload.end(), feat_init.taps.begin(), feat_init.taps.end());
  phy::Packet fin{sc.frame, final_payload,
                  phy::generate_sts(sc.key, c_final, sc.frame.sts_chips)};
  const phy::Waveform fin_rx_wf =
      chan::propagate(phy::build_packet(fin, 1.0, final_tx), ch, two_pi * rng.uniform());
  const sample_t expect_final = resp_tx + 2 * tof + reply;
  chan::RxCapture cap_final =
      make_capture(expect_final, static_cast<int>(final_payload.size()), fin_rx_wf);
  const rx::ReceiveResult rx_final = rx::receive_packet(
      cap_final, expect_final, sc.frame, fin.sts, static_cast<int>(final_payload.size()), sc.rcfg);
  if (dbg) dbg->final = rx_final;
  if (!rx_final.valid() || rx_final.payload[0] != 0x03) {
    out.aborted_at = 2;
    return out;
  }

  // ---- intervals and estimate
  const double t_round1 = samples_to_seconds(rx_resp.toa - poll_tx);
  const double t_reply1 = samples_to_seconds(resp_tx - rx_poll.toa);
  const double t_round2 = samples_to_seconds(rx_final.toa - resp_tx);
  const double t_reply2 = samples_to_seconds(final_tx - rx_resp.toa);
  const DistanceResult dr = compute_distance(t_round1, t_reply1, t_round2, t_reply2);

  // ---- responder-side channel consistency verdict
  const detect::CirFeature feat_resp = detect::extract_feature(rx_poll.cir, rx_poll.first_path);
  detect::CirFeature reported;
  for (int i = 0; i < detect::kFeatureTaps; ++i)
    reported.taps[static_cast<std::size_t>(i)] = rx_final.payload[static_cast<std::size_t>(1 + i)];
  out.completed = true;
  out.d_hat = dr.meters;
  out.suspicious = dr.suspicious;
  out.flagged = detect::flag_mismatch(feat_resp, reported, sc.detect_gamma);
  return out;
}

// Sequential ranging session.  With auto_switch the session falls back to
// hopping permanently after the first flagged round; without it the mode is
// pinned for the session's lifetime.
class Session {
 public:
  Session(Scenario sc, Mode start, std::uint64_t seed, bool auto_switch = true)
      : sc_(std::move(sc)), mode_(start), seed_(seed), auto_switch_(auto_switch) {
    phy::Counter128 c;
    c.lo = mix64(seed ^ 0xC0137EED);
    c.hi = mix64(c.lo);
    ctr_ = c;
  }

  Mode mode() const { return mode_; }
  const phy::Counter128& counter() const { return ctr_; }

  RoundResult step(const adv::AdversaryConfig* atk = nullptr, RoundDebug* dbg = nullptr) {
    const RoundResult r = run_round(sc_, mode_, atk, mix64(seed_ ^ (round_ + 1)), ctr_, dbg);
    ctr_.advance(3);
    ++round_;
    if (auto_switch_ && r.completed && r.flagged) mode_ = Mode::hop;
    return r;
  }

 private:
  Scenario sc_;
  Mode mode_;
  std::uint64_t seed_;
  bool auto_switch_;
  std::uint64_t round_ = 0;
  phy::Counter128 ctr_;
};

}  // namespace hopguard::proto
