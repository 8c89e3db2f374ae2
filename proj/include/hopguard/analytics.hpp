// Closed-form attack-success model.
//
// The injected packet's timestamp field is scrambled with a key the attacker
// does not know, so at the victim's correlator each of the N template taps
// collects an attacker contribution of magnitude x and *random sign*.  With
// X ~ Binomial(N, 1/2) sign agreements the correlator output is x*(2X - N),
// and a ghost peak appears when |x*(2X - N)| exceeds the leading-edge
// threshold theta:
//
//     P_s = 2 * P( X > N/2 + theta/(2x) )          (tie excluded, symmetric)
//
// evaluated in log space so N up to a few thousand stays finite.  On top of
// that sit the two timing factors: the attacker's aim uncertainty relative to
// the vulnerable span (windowed model), and the counter-synchronised hop
// delay, whose arrival-offset density is the trapezoid convolution of the two
// uniform distributions (aim x hop).

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "common.hpp"

namespace hopguard::analytics {

// log C(n, k) via lgamma, in long double.
inline long double log_choose(int n, int k) {
  return std::lgammal(static_cast<long double>(n) + 1) -
         std::lgammal(static_cast<long double>(k) + 1) -
         std::lgammal(static_cast<long double>(n - k) + 1);
}

// P(X > bound) for X ~ Binomial(n, 1/2), strict inequality, exact in log space.
inline double binomial_tail_gt(int n, double bound) {
  require(n >= 1, "binomial_tail_gt: n must be positive");
  const int kmin = static_cast<int>(std::floor(bound)) + 1;
  if (kmin > n) return 0.0;
  if (kmin <= 0) return 1.0;
  const long double ln2n = static_cast<long double>(n) * 0.6931471805599453094L;
  // logsumexp over k in [kmin, n], anchored at the largest term.
  long double lmax = -1e30L;
  for (int k = kmin; k <= n; ++k) lmax = std::max(lmax, log_choose(n, k) - ln2n);
  long double acc = 0.0L;
  for (int k = kmin; k <= n; ++k) acc += std::exp(log_choose(n, k) - ln2n - lmax);
  return static_cast<double>(std::exp(lmax) * acc);
}

// Baseline ghost-peak probability for threshold/amplitude ratio theta/x.
inline double p_success_exact(int n_taps, double theta_over_x) {
  require(theta_over_x >= 0.0, "p_success_exact: threshold ratio must be >= 0");
  const double bound = 0.5 * theta_over_x + 0.5 * static_cast<double>(n_taps);
  return std::min(1.0, 2.0 * binomial_tail_gt(n_taps, bound));
}

// Hoeffding upper bound on the same probability (used as a sanity envelope).
inline double p_success_hoeffding(int n_taps, double theta_over_x) {
  require(theta_over_x >= 0.0, "p_success_hoeffding: threshold ratio must be >= 0");
  const double e = theta_over_x * theta_over_x / (2.0 * static_cast<double>(n_taps));
  return std::min(1.0, 2.0 * std::exp(-e));
}

// Trapezoidal density of Y = T - H with T ~ U[t_lo, t_hi], H ~ U[h_lo, h_hi].
// Degenerate spans (zero width) collapse ramps to steps; both degenerate is a
// point mass handled explicitly in mass().
struct Trapezoid {
  double lo, hi;        // support
  double ramp;          // width of rising/falling edges (= min span width)
  double height;        // flat-top density (= 1 / max span width)

  Trapezoid(double t_lo, double t_hi, double h_lo, double h_hi) {
    require(t_hi >= t_lo && h_hi >= h_lo, "Trapezoid: spans must be ordered");
    const double wt = t_hi - t_lo, wh = h_hi - h_lo;
    lo = t_lo - h_hi;
    hi = t_hi - h_lo;
    ramp = std::min(wt, wh);
    const double wmax = std::max(wt, wh);
    height = wmax > 0.0 ? 1.0 / wmax : 0.0;  // 0 marks the point-mass case
  }

  double pdf(double y) const {
    if (height == 0.0) return y == lo ? std::numeric_limits<double>::infinity() : 0.0;
    if (y <= lo || y >= hi) return 0.0;
    if (ramp > 0.0 && y < lo + ramp) return height * (y - lo) / ramp;
    if (ramp > 0.0 && y > hi - ramp) return height * (hi - y) / ramp;
    return height;
  }

  double cdf(double y) const {
    if (height == 0.0) return y >= lo ? 1.0 : 0.0;
    if (y <= lo) return 0.0;
    if (y >= hi) return 1.0;
    double acc = 0.0;
    if (ramp > 0.0) {
      const double r = std::min(y, lo + ramp) - lo;
      acc += height * r * r / (2.0 * ramp);
      if (y <= lo + ramp) return acc;
    }
    const double flat_hi = hi - ramp;
    acc += height * (std::min(y, flat_hi) - (lo + ramp));
    if (y <= flat_hi) return acc;
    const double r = hi - y;  // remaining falling-ramp tail beyond y
    return acc + (ramp > 0.0 ? height * ramp / 2.0 - height * r * r / (2.0 * ramp) : 0.0);
  }

  // P(a <= Y <= b)
  double mass(double a, double b) const {
    if (b < a) return 0.0;
    if (height == 0.0) return (a <= lo && lo <= b) ? 1.0 : 0.0;
    return cdf(b) - cdf(a);
  }
};

struct AnalyticParams {
  int n_taps = 64;
  double theta_over_x = 1.6;   // threshold / per-tap attacker amplitude
  // Vulnerable span of the victim packet (between sync-pattern end and
  // payload end), as arrival offsets in microseconds.
  double window_lo_us = 0.0;
  double window_hi_us = 0.641;  // 320 chips at 499.2 MHz
  // Attacker aim: arrival offset uniform over [aim_lo, aim_hi].
  double aim_lo_us = 0.2955;    // centred on the window, width 0.05 us
  double aim_hi_us = 0.3455;
  // Hop delay uniform over [hop_lo, hop_hi]; zero width = hopping disabled.
  double hop_lo_us = 0.0;
  double hop_hi_us = 5.0;

  double window_us() const { return window_hi_us - window_lo_us; }
  double aim_us() const { return aim_hi_us - aim_lo_us; }
  double hop_us() const { return hop_hi_us - hop_lo_us; }

  void validate() const {
    require(n_taps >= 1, "AnalyticParams: n_taps must be >= 1");
    require(theta_over_x >= 0.0, "AnalyticParams: theta_over_x must be >= 0");
    require(window_hi_us > window_lo_us, "AnalyticParams: empty vulnerable window");
    require(aim_hi_us >= aim_lo_us, "AnalyticParams: aim span must be ordered");
    require(hop_hi_us >= hop_lo_us, "AnalyticParams: hop span must be ordered");
    require(hop_us() >= aim_us() || hop_us() == 0.0,
            "AnalyticParams: hop span below aim uncertainty defeats the model");
  }
};

// Success with the attacker's aim spread over its uncertainty span: the hit
// probability is the covered fraction of the span, clamped at 1 (a precise
// attacker always lands inside the window).
inline double p_success_windowed(const AnalyticParams& p) {
  p.validate();
  const double base = p_success_exact(p.n_taps, p.theta_over_x);
  if (p.aim_us() == 0.0) return base;
  return base * std::min(1.0, p.window_us() / p.aim_us());
}

// Success against counter-synchronised hopping: arrival offset is
// Y = aim - hop, and only mass inside the vulnerable window survives.
inline double p_success_hopped(const AnalyticParams& p) {
  p.validate();
  const double base = p_success_exact(p.n_taps, p.theta_over_x);
  const Trapezoid t(p.aim_lo_us, p.aim_hi_us, p.hop_lo_us, p.hop_hi_us);
  return base * t.mass(p.window_lo_us, p.window_hi_us);
}

// Headline improvement factor: the hop span dilutes the attacker's effective
// timing by hop/aim once both exceed the window width.
inline double hop_gain(const AnalyticParams& p) {
  p.validate();
  require(p.aim_us() > 0.0, "hop_gain: aim span must be positive");
  require(p.hop_us() > 0.0, "hop_gain: hop span must be positive");
  return p.hop_us() / p.aim_us();
}

}  // namespace hopguard::analytics
