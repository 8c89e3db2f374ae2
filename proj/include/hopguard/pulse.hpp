// Pulse shaping and the sparse waveform representation.
//
// One transmitted pulse is a root-raised-cosine (beta = 0.5) spanning +/-4
// chips, sampled at 4 samples/chip and normalised to unit discrete energy.
// After the receiver's matched filter a pulse therefore appears as the
// raised-cosine autocorrelation, whose integer-chip zero crossings keep
// neighbouring chips orthogonal on the chip grid.
//
// Waveforms stay sparse (pulse positions + complex amplitudes): a packet has
// a few thousand pulses spread over ~150k samples, and captures only ever
// densify the sub-ranges a receiver actually reads.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "common.hpp"

namespace hopguard::phy {

inline constexpr int kPulseHalfSupport = 4 * kSamplesPerChip;  // samples
inline constexpr int kPulseTaps = 2 * kPulseHalfSupport + 1;
inline constexpr double kPulseBeta = 0.5;

namespace pulse_detail {

inline std::array<double, kPulseTaps> make_rrc() {
  std::array<double, kPulseTaps> h{};
  const double T = kSamplesPerChip;
  const double beta = kPulseBeta;
  for (int i = 0; i < kPulseTaps; ++i) {
    const double t = (i - kPulseHalfSupport) / T;
    double v;
    if (std::abs(t) < 1e-9) {
      v = 1.0 - beta + 4.0 * beta / M_PI;
    } else if (std::abs(std::abs(t) - 1.0 / (4.0 * beta)) < 1e-9) {
      v = beta / std::sqrt(2.0) *
          ((1.0 + 2.0 / M_PI) * std::sin(M_PI / (4.0 * beta)) +
           (1.0 - 2.0 / M_PI) * std::cos(M_PI / (4.0 * beta)));
    } else {
      const double num = std::sin(M_PI * t * (1.0 - beta)) +
                         4.0 * beta * t * std::cos(M_PI * t * (1.0 + beta));
      const double den = M_PI * t * (1.0 - 16.0 * beta * beta * t * t);
      v = num / den;
    }
    h[static_cast<std::size_t>(i)] = v;
  }
  double e = 0.0;
  for (double v : h) e += v * v;
  const double norm = 1.0 / std::sqrt(e);
  for (double& v : h) v *= norm;
  return h;
}

}  // namespace pulse_detail

inline const std::array<double, kPulseTaps>& pulse_taps_d() {
  static const std::array<double, kPulseTaps> taps = pulse_detail::make_rrc();
  return taps;
}

inline const std::array<float, kPulseTaps>& pulse_taps() {
  static const std::array<float, kPulseTaps> taps = [] {
    std::array<float, kPulseTaps> f{};
    const auto& d = pulse_taps_d();
    for (int i = 0; i < kPulseTaps; ++i) f[i] = static_cast<float>(d[i]);
    return f;
  }();
  return taps;
}

// Matched-filter response (pulse autocorrelation) at integer sample lag.
inline double pulse_autocorr(int lag) {
  const auto& h = pulse_taps_d();
  const int a = std::abs(lag);
  if (a >= kPulseTaps) return 0.0;
  double acc = 0.0;
  for (int i = 0; i + a < kPulseTaps; ++i) acc += h[i] * h[i + a];
  return acc;
}

// A leading-edge detector firing at fraction `mpep` of the peak walks up the
// matched-filter shoulder: it crosses this many samples before the true
// arrival.  Deterministic property of the pulse, used as the receiver's
// timestamp calibration constant.
inline int led_calibration_samples(double mpep) {
  const double peak = pulse_autocorr(0);
  int k = 0;
  while (pulse_autocorr(k + 1) > mpep * peak) ++k;
  return k;
}

// Sparse baseband waveform: complex pulse amplitudes on the sample grid.
struct Waveform {
  sample_t start = 0;  // absolute sample index of the packet's chip 0
  std::vector<std::pair<std::int32_t, cfloat>> pulses;  // (offset from start, amplitude)

  sample_t first_sample() const {
    return pulses.empty() ? start : start + pulses.front().first - kPulseHalfSupport;
  }
  sample_t last_sample() const {
    return pulses.empty() ? start : start + pulses.back().first + kPulseHalfSupport;
  }

  // Adds the shaped pulses into `out`, which covers absolute samples
  // [from, from + out.size()).  Pulses are kept sorted by offset.
  void densify(std::vector<cfloat>& out, sample_t from) const {
    const auto& h = pulse_taps();
    const sample_t to = from + static_cast<sample_t>(out.size());
    for (const auto& [off, amp] : p_range(from - start, to - start)) {
      const sample_t centre = start + off;
      for (int i = 0; i < kPulseTaps; ++i) {
        const sample_t n = centre + i - kPulseHalfSupport;
        if (n < from || n >= to) continue;
        out[static_cast<std::size_t>(n - from)] += amp * h[static_cast<std::size_t>(i)];
      }
    }
  }

  std::vector<cfloat> to_samples(sample_t from, sample_t count) const {
    std::vector<cfloat> out(static_cast<std::size_t>(count), cfloat{0.0f, 0.0f});
    densify(out, from);
    return out;
  }

 private:
  // Pulses whose support intersects offsets [lo, hi).
  std::vector<std::pair<std::int32_t, cfloat>> p_range(sample_t lo, sample_t hi) const {
    std::vector<std::pair<std::int32_t, cfloat>> out;
    for (const auto& p : pulses) {
      if (p.first + kPulseHalfSupport >= lo && p.first - kPulseHalfSupport < hi)
        out.push_back(p);
    }
    return out;
  }
};

}  // namespace hopguard::phy
