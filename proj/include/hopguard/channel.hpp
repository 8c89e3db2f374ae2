// Propagation and receive captures.
//
// The channel is line-of-sight: a waveform arrives delayed by
// round(distance / c * Fs) samples, scaled, and rotated by the carrier phase
// of the link.  A capture is the superposition of any number of arriving
// waveforms plus complex white Gaussian noise.
//
// Captures materialise lazily.  Noise sample n is a pure function of
// (noise_seed, n), so a receiver that only ever looks at the synchronisation
// region and the SFD-to-payload region gets byte-identical values to a full
// materialisation — the Monte Carlo loop spends its time only on samples
// something actually reads.

#pragma once

#include <utility>
#include <vector>

#include "common.hpp"
#include "packet.hpp"
#include "pulse.hpp"
#include "rng.hpp"

namespace hopguard::chan {

struct ChannelConfig {
  double distance_m = 10.0;
  double gain = 1.0;     // amplitude scale at the receive antenna
  double snr_db = -10.0; // legitimate-packet average power over noise power

  sample_t delay_samples() const {
    require(distance_m >= 0.0, "ChannelConfig: negative distance");
    return static_cast<sample_t>(std::llround(distance_m / kSpeedOfLight * kSampleRateHz));
  }
};

// Applies delay, gain and carrier phase to a transmitted waveform.
inline phy::Waveform propagate(const phy::Waveform& tx, const ChannelConfig& cfg,
                               double phase_rad) {
  phy::Waveform rx = tx;
  rx.start += cfg.delay_samples();
  const cfloat rot{static_cast<float>(cfg.gain * std::cos(phase_rad)),
                   static_cast<float>(cfg.gain * std::sin(phase_rad))};
  for (auto& [off, amp] : rx.pulses) amp *= rot;
  return rx;
}

class RxCapture {
 public:
  RxCapture(sample_t begin, sample_t end, double noise_sigma, std::uint64_t noise_seed)
      : begin_(begin), end_(end), sigma_(noise_sigma), seed_(noise_seed) {
    require(end > begin, "RxCapture: empty span");
    require(noise_sigma >= 0.0, "RxCapture: negative noise level");
  }

  sample_t begin() const { return begin_; }
  sample_t end() const { return end_; }
  double noise_sigma() const { return sigma_; }

  void add(phy::Waveform w) {
    components_.push_back(std::move(w));
    regions_.clear();
  }

  const std::vector<phy::Waveform>& components() const { return components_; }

  // Pointer to materialised samples covering [from, from + count).
  const cfloat* view(sample_t from, sample_t count) const {
    require(from >= begin_ && from + count <= end_, "RxCapture: read outside capture");
    for (const auto& r : regions_)
      if (r.from <= from && from + count <= r.from + static_cast<sample_t>(r.data.size()))
        return r.data.data() + (from - r.from);
    regions_.push_back(materialise(from, count));
    return regions_.back().data.data();
  }

  // Full densification (diagnostics and tests; the hot path never calls it).
  std::vector<cfloat> to_samples() const {
    return materialise(begin_, end_ - begin_).data;
  }

 private:
  struct Region {
    sample_t from;
    std::vector<cfloat> data;
  };

  Region materialise(sample_t from, sample_t count) const {
    Region r{from, std::vector<cfloat>(static_cast<std::size_t>(count))};
    if (sigma_ > 0.0) {
      for (sample_t i = 0; i < count; ++i) {
        const auto z = complex_gaussian(seed_, static_cast<std::uint64_t>(from + i - begin_));
        r.data[static_cast<std::size_t>(i)] = cfloat{static_cast<float>(sigma_ * z.real()),
                                                     static_cast<float>(sigma_ * z.imag())};
      }
    }
    for (const auto& w : components_) w.densify(r.data, from);
    return r;
  }

  sample_t begin_, end_;
  double sigma_;
  std::uint64_t seed_;
  std::vector<phy::Waveform> components_;
  mutable std::vector<Region> regions_;
};

// Noise level for a capture whose legitimate component is `ref`, at the
// configured signal-to-noise ratio.  Referenced to the packet's average
// power over its full duration.
inline double noise_sigma_for(const phy::Waveform& ref, const ChannelConfig& cfg) {
  return std::sqrt(phy::average_power(ref) * db_to_power(-cfg.snr_db));
}

// Adversarial injection is just another arrival superposed on the capture.
inline void inject(RxCapture& capture, phy::Waveform attack) { capture.add(std::move(attack)); }

}  // namespace hopguard::chan
