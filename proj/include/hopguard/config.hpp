// Experiment configuration file.
//
// Flat key-value text ("key = value", '#' comments), units spelled out in the
// key names, versioned via config_version.  Grids use the same inclusive
// start:stop:step syntax as the CLI flags.  Unknown keys are errors: a typo
// silently falling back to a default would invalidate a run.

#pragma once

#include <istream>
#include <string>

#include "harness.hpp"
#include "protocol.hpp"

namespace hopguard::mc {

inline constexpr int kConfigVersion = 1;

struct ExperimentConfig {
  proto::Scenario scenario;
  SweepSpec sweep = [] {
    SweepSpec s;
    s.sir_db = parse_range("-20:-30:2");
    s.tsy_us = parse_range("-2.5:2.5:0.5");
    return s;
  }();
  bool auto_switch = false;  // mode=auto: sessions fall back to hopping on a flag
  double hop_min_us = 15.0;
  double hop_max_us = 20.0;
  int hop_entries = 32;

  void finalize() {
    scenario.hops = proto::HopTable::uniform(hop_min_us, hop_max_us, hop_entries);
    scenario.frame.validate();
    scenario.attack_frame.validate();
    scenario.rcfg.validate();
  }
};

namespace config_detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline int to_int(const std::string& v) {
  std::size_t pos = 0;
  const int x = std::stoi(v, &pos);
  require(pos == v.size(), "config: not an integer");
  return x;
}

inline double to_double(const std::string& v) {
  std::size_t pos = 0;
  const double x = std::stod(v, &pos);
  require(pos == v.size(), "config: not a number");
  return x;
}

inline std::uint64_t to_u64(const std::string& v) {
  std::size_t pos = 0;
  const unsigned long long x = std::stoull(v, &pos);
  require(pos == v.size(), "config: not an unsigned integer");
  return x;
}

inline phy::StsKey to_key(const std::string& v) {
  require(v.size() == 32, "config: sts_key_hex must be 32 hex digits");
  phy::StsKey key{};
  auto nib = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    require(false, "config: sts_key_hex has a non-hex digit");
    return 0;
  };
  for (int i = 0; i < 16; ++i)
    key[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(
        (nib(v[static_cast<std::size_t>(2 * i)]) << 4) | nib(v[static_cast<std::size_t>(2 * i + 1)]));
  return key;
}

}  // namespace config_detail

// Parses one config stream.  Every recognised key overrides the built-in
// default; keys may appear in any order; the last assignment wins.
inline ExperimentConfig load_experiment_config(std::istream& is) {
  using namespace config_detail;
  ExperimentConfig cfg;
  bool versioned = false;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, "config: expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    require(!key.empty() && !val.empty(), "config: empty key or value");

    auto& sc = cfg.scenario;
    if (key == "config_version") {
      require(to_int(val) == kConfigVersion, "config: unsupported config_version");
      versioned = true;
    } else if (key == "trial_count") {
      cfg.sweep.trials = to_int(val);
    } else if (key == "master_seed") {
      cfg.sweep.master = to_u64(val);
    } else if (key == "threads") {
      cfg.sweep.threads = to_int(val);
    } else if (key == "mode") {
      if (val == "classic") {
        cfg.sweep.mode = proto::Mode::classic;
        cfg.auto_switch = false;
      } else if (val == "hop") {
        cfg.sweep.mode = proto::Mode::hop;
        cfg.auto_switch = false;
      } else if (val == "auto") {
        cfg.sweep.mode = proto::Mode::classic;
        cfg.auto_switch = true;
      } else {
        require(false, "config: mode must be classic, hop or auto");
      }
    } else if (key == "snr_db") {
      sc.snr_db = to_double(val);
    } else if (key == "sir_db") {
      cfg.sweep.sir_db = parse_range(val);
    } else if (key == "tsy_us") {
      cfg.sweep.tsy_us = parse_range(val);
    } else if (key == "true_distance_m") {
      sc.distance_m = to_double(val);
    } else if (key == "success_threshold_m") {
      cfg.sweep.success_below_m = to_double(val);
    } else if (key == "reply_us") {
      sc.reply_us = to_double(val);
    } else if (key == "channel_gain") {
      sc.channel_gain = to_double(val);
    } else if (key == "sts_key_hex") {
      sc.key = to_key(val);
    } else if (key == "hop_min_us") {
      cfg.hop_min_us = to_double(val);
    } else if (key == "hop_max_us") {
      cfg.hop_max_us = to_double(val);
    } else if (key == "hop_entries") {
      cfg.hop_entries = to_int(val);
    } else if (key == "sync_window_samples") {
      sc.rcfg.sync_window = to_int(val);
    } else if (key == "sync_symbols") {
      sc.rcfg.sync_symbols = to_int(val);
    } else if (key == "sfd_detect_threshold") {
      sc.rcfg.sfd_threshold = to_double(val);
    } else if (key == "btw_samples") {
      sc.rcfg.btw = to_int(val);
    } else if (key == "mpep_threshold") {
      sc.rcfg.mpep = to_double(val);
    } else if (key == "papr_threshold") {
      sc.rcfg.papr = to_double(val);
    } else if (key == "rake_fingers") {
      sc.rcfg.rake_fingers = to_int(val);
    } else if (key == "rake_lo_samples") {
      sc.rcfg.rake_lo = to_int(val);
    } else if (key == "rake_hi_samples") {
      sc.rcfg.rake_hi = to_int(val);
    } else if (key == "detect_gamma") {
      sc.detect_gamma = to_double(val);
    } else if (key == "frame_preamble_reps") {
      sc.frame.preamble_reps = to_int(val);
    } else if (key == "frame_spreading") {
      sc.frame.spreading = to_int(val);
    } else if (key == "frame_sts_chips") {
      sc.frame.sts_chips = to_int(val);
    } else if (key == "frame_gap_sts_chips") {
      sc.frame.gap_sts_chips = to_int(val);
    } else if (key == "frame_gap_data_chips") {
      sc.frame.gap_data_chips = to_int(val);
    } else if (key == "frame_data_symbol_chips") {
      sc.frame.data_symbol_chips = to_int(val);
    } else if (key == "frame_burst_chips") {
      sc.frame.burst_chips = to_int(val);
    } else if (key == "frame_payload_capacity") {
      sc.frame.payload_capacity = to_int(val);
    } else if (key == "attack_preamble_reps") {
      sc.attack_frame.preamble_reps = to_int(val);
    } else if (key == "attack_spreading") {
      sc.attack_frame.spreading = to_int(val);
    } else if (key == "attack_sts_chips") {
      sc.attack_frame.sts_chips = to_int(val);
    } else if (key == "attack_gap_sts_chips") {
      sc.attack_frame.gap_sts_chips = to_int(val);
    } else if (key == "attack_gap_data_chips") {
      sc.attack_frame.gap_data_chips = to_int(val);
    } else if (key == "attack_data_symbol_chips") {
      sc.attack_frame.data_symbol_chips = to_int(val);
    } else if (key == "attack_burst_chips") {
      sc.attack_frame.burst_chips = to_int(val);
    } else if (key == "attack_payload_capacity") {
      sc.attack_frame.payload_capacity = to_int(val);
    } else {
      throw std::invalid_argument("config: unknown key '" + key + "' (line " +
                                  std::to_string(lineno) + ")");
    }
  }
  require(versioned, "config: missing config_version");
  cfg.finalize();
  return cfg;
}

// Config-file flavour of a full grid run.
inline std::vector<SweepRow> run_experiment(const ExperimentConfig& cfg,
                                            const ProgressFn& progress = nullptr) {
  return run_sweep(cfg.scenario, cfg.sweep, {}, progress);
}

}  // namespace hopguard::mc
