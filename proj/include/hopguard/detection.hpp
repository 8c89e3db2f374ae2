// Distance-commitment style consistency check.
//
// Each side summarises the channel it measured as 16 chip-spaced magnitude
// taps starting at its detected first path, max-normalised and quantised to
// 8 bits.  The initiator ships its Response-reception feature inside the
// Final payload; the responder correlates it against its own Poll-reception
// feature.  A line-of-sight channel is reciprocal, so honest features agree;
// a ghost edge makes the initiator summarise attacker keystream junk and the
// correlation collapses.
//
// Chip-cell taps matter: sample-spaced taps around any correlation peak
// mostly re-measure the pulse autocorrelation shoulder, which a ghost peak
// exhibits just as well as the true path.  Taking the strongest magnitude in
// each chip-wide cell instead makes neighbouring taps independent channel
// samples — near zero off the direct path on a clean line-of-sight link,
// keystream-correlation junk around a ghost — and keeps the digest stable
// when the two sides' edge detectors land a sample apart.

#pragma once

#include <array>
#include <cmath>

#include "common.hpp"
#include "receiver.hpp"

namespace hopguard::detect {

inline constexpr int kFeatureTaps = 16;
inline constexpr double kDefaultGamma = 0.9;

struct CirFeature {
  std::array<std::uint8_t, kFeatureTaps> taps{};
};

inline constexpr int kFeatureStride = kSamplesPerChip;

inline CirFeature extract_feature(const rx::CirSpectrum& s, sample_t first_path) {
  CirFeature f;
  const auto idx0 = static_cast<std::int64_t>(first_path - s.base);
  float peak = 0.0f;
  float window[kFeatureTaps] = {};
  for (int i = 0; i < kFeatureTaps; ++i) {
    float v = 0.0f;
    for (int j = 0; j < kFeatureStride; ++j) {
      const std::int64_t idx = idx0 + static_cast<std::int64_t>(i) * kFeatureStride + j;
      if (idx >= 0 && idx < static_cast<std::int64_t>(s.mag.size()))
        v = std::max(v, s.mag[static_cast<std::size_t>(idx)]);
    }
    window[i] = v;
    peak = std::max(peak, v);
  }
  if (peak > 0.0f)
    for (int i = 0; i < kFeatureTaps; ++i)
      f.taps[static_cast<std::size_t>(i)] =
          static_cast<std::uint8_t>(std::lround(255.0f * window[i] / peak));
  return f;
}

// Normalised correlation in [0, 1] (features are non-negative).
inline double similarity(const CirFeature& a, const CirFeature& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (int i = 0; i < kFeatureTaps; ++i) {
    const double x = a.taps[static_cast<std::size_t>(i)];
    const double y = b.taps[static_cast<std::size_t>(i)];
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

// 1 = channel mismatch (treat the round as attacked).
inline int flag_mismatch(const CirFeature& reference, const CirFeature& reported,
                         double gamma = kDefaultGamma) {
  require(gamma > 0.0 && gamma < 1.0, "flag_mismatch: gamma must be in (0,1)");
  return similarity(reference, reported) < gamma ? 1 : 0;
}

}  // namespace hopguard::detect
