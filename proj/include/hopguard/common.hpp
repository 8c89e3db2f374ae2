// Shared constants and small helpers for the ranging simulator.
//
// Everything downstream works on an integer sample grid: the HRP chip rate is
// 499.2 MHz and the simulator samples at 4x chip rate (1.9968 GHz), so one
// sample is ~0.5008 ns (~15 cm of light travel).  Event times (transmit
// epochs, arrival estimates) are int64 sample indices; only the final
// distance math converts back to seconds.

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace hopguard {

using sample_t = std::int64_t;
using cfloat = std::complex<float>;

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kChipRateHz = 499.2e6;
inline constexpr int kSamplesPerChip = 4;
inline constexpr double kSampleRateHz = kChipRateHz * kSamplesPerChip;  // 1.9968 GHz
inline constexpr double kSecondsPerSample = 1.0 / kSampleRateHz;
inline constexpr double kMetersPerSample = kSpeedOfLight / kSampleRateHz;

inline sample_t us_to_samples(double us) {
  return static_cast<sample_t>(std::llround(us * 1e-6 * kSampleRateHz));
}

inline double samples_to_us(sample_t s) { return static_cast<double>(s) / kSampleRateHz * 1e6; }

inline double samples_to_seconds(sample_t s) { return static_cast<double>(s) * kSecondsPerSample; }

inline double db_to_amplitude(double db) { return std::pow(10.0, db / 20.0); }

inline double db_to_power(double db) { return std::pow(10.0, db / 10.0); }

// Precondition helper: the simulator treats bad configs as programming errors.
inline void require(bool cond, const char* what) {
  if (!cond) throw std::invalid_argument(what);
}

}  // namespace hopguard
