// hopguard — baseband ranging simulator and attack-statistics harness.
//
//   hopguard simulate --sir -26 --tsy -1 --trials 2000 [--mode hop] ...
//   hopguard sweep    --sir -20:-30:2 --tsy -2.5:2.5:0.5 --out grid.csv ...
//   hopguard range    --distance 10 --rounds 20 --attack ...
//   hopguard analyze  [--taps 64 --theta-over-x 1.6 ...]
//   hopguard selftest
//
// Everything that prints as CSV goes to stdout (or --out); progress and
// diagnostics go to stderr.

#include <hopguard/hopguard.hpp>

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace hopguard;

const std::set<std::string> kBoolFlags = {"resume", "deterministic", "full", "help", "attack"};

struct Args {
  std::map<std::string, std::string> kv;
  std::set<std::string> flags;

  bool has(const std::string& k) const { return kv.count(k) || flags.count(k); }
  std::string get(const std::string& k, const std::string& dflt) const {
    auto it = kv.find(k);
    return it == kv.end() ? dflt : it->second;
  }
  double get_d(const std::string& k, double dflt) const {
    auto it = kv.find(k);
    return it == kv.end() ? dflt : std::stod(it->second);
  }
  long long get_i(const std::string& k, long long dflt) const {
    auto it = kv.find(k);
    return it == kv.end() ? dflt : std::stoll(it->second);
  }
};

Args parse_args(int argc, char** argv, int from) {
  Args a;
  for (int i = from; i < argc; ++i) {
    std::string tok = argv[i];
    if (tok.rfind("--", 0) != 0) throw std::invalid_argument("unexpected argument: " + tok);
    tok = tok.substr(2);
    const auto eq = tok.find('=');
    if (eq != std::string::npos) {
      a.kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    } else if (kBoolFlags.count(tok)) {
      a.flags.insert(tok);
    } else {
      if (i + 1 >= argc) throw std::invalid_argument("missing value for --" + tok);
      a.kv[tok] = argv[++i];
    }
  }
  return a;
}

// Grid runs: 'auto' degrades to classic (a single-round trial has no next
// round to switch).  Sessions (`range`) honour the switch.
struct ModeSpec {
  proto::Mode start;
  bool auto_switch;
};

ModeSpec parse_mode(const std::string& s) {
  if (s == "classic") return {proto::Mode::classic, false};
  if (s == "hop") return {proto::Mode::hop, false};
  if (s == "auto") return {proto::Mode::classic, true};
  throw std::invalid_argument("mode must be 'classic', 'hop' or 'auto'");
}

std::string timestamp() {
  char buf[64];
  const std::time_t t = std::time(nullptr);
  std::tm tmv{};
  gmtime_r(&t, &tmv);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tmv);
  return buf;
}

int usage(std::ostream& os, int code) {
  os << "usage: hopguard <command> [options]\n"
        "\n"
        "commands:\n"
        "  simulate   one (sir, tsy) cell of independent attacked rounds, or the\n"
        "             full experiment described by a config file\n"
        "             --sir DB --tsy US [--trials N] [--mode classic|hop|auto]\n"
        "             [--seed S] [--threads K] [--out FILE] [--debug-cir FILE]\n"
        "             [--success-m M] [--config FILE]\n"
        "  sweep      full grid; CSV rows per cell\n"
        "             --sir A:B:STEP --tsy A:B:STEP [--trials N | --full] [--mode M]\n"
        "             [--seed S] [--threads K] [--out FILE] [--resume]\n"
        "             [--deterministic] [--config FILE]\n"
        "  range      sequential ranging session ('auto' falls back to hopping\n"
        "             when a round is flagged)\n"
        "             [--distance M] [--rounds N] [--attack --sir DB --tsy US]\n"
        "             [--mode classic|hop|auto] [--seed S] [--trace FILE]\n"
        "             [--debug-cir FILE]\n"
        "  analyze    closed-form success model; CSV over a threshold-ratio range\n"
        "             [--n N] [--theta-over-x A:B:STEP] [--window-us W]\n"
        "             [--aim-us A] [--hop-us H]\n"
        "  selftest   quick invariant checks\n"
        "\n"
        "config file: flat 'key = value' lines (see configs/attack_grid.cfg); explicit\n"
        "flags override file values.  Grid runs treat mode 'auto' as classic: a\n"
        "single-round trial has no later round to switch.\n"
        "environment: UWB_HOPGUARD_THREADS caps the worker count.\n";
  return code;
}

// Shared by simulate/sweep: config file as the base, explicit flags on top.
mc::ExperimentConfig experiment_from(const Args& a) {
  mc::ExperimentConfig cfg;
  if (a.kv.count("config")) {
    std::ifstream f(a.kv.at("config"));
    if (!f) throw std::invalid_argument("cannot read config file " + a.kv.at("config"));
    cfg = mc::load_experiment_config(f);
  }
  if (a.kv.count("sir")) cfg.sweep.sir_db = mc::parse_range(a.kv.at("sir"));
  if (a.kv.count("tsy")) cfg.sweep.tsy_us = mc::parse_range(a.kv.at("tsy"));
  if (a.flags.count("full")) cfg.sweep.trials = 20000;
  if (a.kv.count("trials")) cfg.sweep.trials = a.get_i("trials", cfg.sweep.trials);
  if (a.kv.count("seed"))
    cfg.sweep.master = static_cast<std::uint64_t>(a.get_i("seed", 1));
  if (a.kv.count("threads")) cfg.sweep.threads = static_cast<int>(a.get_i("threads", 0));
  if (a.kv.count("success-m")) cfg.sweep.success_below_m = a.get_d("success-m", 5.0);
  if (a.kv.count("mode")) {
    const ModeSpec m = parse_mode(a.kv.at("mode"));
    cfg.sweep.mode = m.start;
    cfg.auto_switch = m.auto_switch;
  }
  return cfg;
}

// Writes the response-reception correlator trace of trial 0 of a cell.
int dump_cir(const std::string& path, const proto::Scenario& sc, proto::Mode mode, double sir,
             double tsy, std::uint64_t seed, double success_m) {
  adv::AdversaryConfig atk{sir, tsy};
  proto::RoundDebug dbg;
  mc::run_trial(sc, mode, &atk, sir, tsy, seed, 0, success_m, &dbg);
  std::ofstream f(path);
  if (!f) {
    std::cerr << "error: cannot write " << path << "\n";
    return 1;
  }
  const rx::CirSpectrum& cir = dbg.response.cir;
  const sample_t nominal = dbg.response.arrival +
                           static_cast<sample_t>(sc.frame.sts_start_chips()) * kSamplesPerChip;
  f << "offset_samples,magnitude\n";
  for (std::size_t i = 0; i < cir.mag.size(); ++i)
    f << (cir.base + static_cast<sample_t>(i)) - nominal << "," << cir.mag[i] << "\n";
  std::cerr << "wrote " << cir.mag.size() << " correlator bins (first_path offset "
            << dbg.response.first_path - nominal << ")\n";
  return 0;
}

int cmd_simulate(const Args& a) {
  Args base = a;
  if (!a.kv.count("config")) {
    // Bare simulate is a single cell, not the default sweep grid.
    base.kv["sir"] = a.get("sir", "-26");
    base.kv["tsy"] = a.get("tsy", "-1");
  }
  const mc::ExperimentConfig cfg = experiment_from(base);

  if (a.kv.count("debug-cir")) {
    const int rc = dump_cir(a.kv.at("debug-cir"), cfg.scenario, cfg.sweep.mode,
                            cfg.sweep.sir_db.front(), cfg.sweep.tsy_us.front(),
                            cfg.sweep.master, cfg.sweep.success_below_m);
    if (rc != 0) return rc;
  }

  const auto rows = mc::run_experiment(cfg);

  std::ostream* os = &std::cout;
  std::ofstream file;
  if (a.kv.count("out")) {
    file.open(a.kv.at("out"));
    if (!file) {
      std::cerr << "error: cannot write " << a.kv.at("out") << "\n";
      return 1;
    }
    os = &file;
  }
  mc::write_sweep_csv(*os, rows);
  return 0;
}

int cmd_sweep(const Args& a) {
  const mc::ExperimentConfig cfg = experiment_from(a);
  const bool deterministic = a.flags.count("deterministic") != 0;
  const std::string out = a.get("out", "");

  std::vector<mc::SweepRow> have;
  if (a.flags.count("resume") && !out.empty()) {
    std::ifstream f(out);
    if (f) have = mc::read_sweep_csv(f);
    if (!have.empty())
      std::cerr << "resuming: " << have.size() << " cells present in " << out << "\n";
  }

  const auto progress = [&](std::size_t done, std::size_t total, const mc::SweepRow& row) {
    std::fprintf(stderr, "[%zu/%zu] sir=%g tsy=%g success=%.4f failures=%lld\n", done, total,
                 row.sir_db, row.tsy_us, row.cell.success_rate(),
                 static_cast<long long>(row.cell.failures));
  };

  const auto rows = mc::run_sweep(cfg.scenario, cfg.sweep, have, progress);

  std::string banner;
  if (!deterministic) {
    std::ostringstream b;
    b << "hopguard sweep mode=" << (cfg.sweep.mode == proto::Mode::hop ? "hop" : "classic")
      << " trials=" << cfg.sweep.trials << " seed=" << cfg.sweep.master
      << " generated=" << timestamp();
    banner = b.str();
  }

  if (out.empty()) {
    mc::write_sweep_csv(std::cout, rows, banner);
  } else {
    std::ofstream f(out);
    if (!f) {
      std::cerr << "error: cannot write " << out << "\n";
      return 1;
    }
    mc::write_sweep_csv(f, rows, banner);
    std::cerr << "wrote " << rows.size() << " cells to " << out << "\n";
  }
  return 0;
}

int cmd_range(const Args& a) {
  proto::Scenario sc;
  sc.distance_m = a.get_d("distance", 10.0);
  const long long rounds = a.get_i("rounds", 10);
  const ModeSpec mode = parse_mode(a.get("mode", "auto"));
  const std::uint64_t seed = static_cast<std::uint64_t>(a.get_i("seed", 1));
  const bool attack = a.flags.count("attack") != 0;
  adv::AdversaryConfig atk{a.get_d("sir", -26.0), a.get_d("tsy", -1.0)};

  std::ofstream trace;
  if (a.kv.count("trace")) {
    trace.open(a.kv.at("trace"));
    if (!trace) {
      std::cerr << "error: cannot write " << a.kv.at("trace") << "\n";
      return 1;
    }
    trace << "round,ctr_hi,ctr_lo,mode,hop_us,poll_tx,resp_tx,final_tx,completed,d_hat_m,"
             "flagged\n";
  }

  proto::Session session(sc, mode.start, seed, mode.auto_switch);
  std::printf("round,mode,hop_us,completed,d_hat_m,flagged\n");
  std::int64_t flagged = 0, completed = 0;
  for (long long i = 0; i < rounds; ++i) {
    const char* m = session.mode() == proto::Mode::hop ? "hop" : "classic";
    const phy::Counter128 ctr = session.counter();
    proto::RoundDebug dbg;
    const proto::RoundResult r = session.step(attack ? &atk : nullptr, &dbg);
    if (r.completed) {
      ++completed;
      flagged += r.flagged;
      std::printf("%lld,%s,%.3f,1,%.3f,%d\n", i, m, samples_to_us(r.hop_responder), r.d_hat,
                  r.flagged);
    } else {
      std::printf("%lld,%s,%.3f,0,,\n", i, m, samples_to_us(r.hop_responder));
    }
    if (trace.is_open()) {
      char buf[256];
      std::snprintf(buf, sizeof buf,
                    "%lld,%" PRIu64 ",%" PRIu64 ",%s,%.3f,%lld,%lld,%lld,%d,%.3f,%d", i, ctr.hi,
                    ctr.lo, m, samples_to_us(r.hop_responder),
                    static_cast<long long>(dbg.poll_tx), static_cast<long long>(dbg.resp_tx),
                    static_cast<long long>(dbg.final_tx), r.completed ? 1 : 0, r.d_hat,
                    r.flagged);
      trace << buf << "\n";
    }
    if (i == 0 && a.kv.count("debug-cir")) {
      std::ofstream f(a.kv.at("debug-cir"));
      if (!f) {
        std::cerr << "error: cannot write " << a.kv.at("debug-cir") << "\n";
        return 1;
      }
      const rx::CirSpectrum& cir = dbg.response.cir;
      f << "offset_samples,magnitude\n";
      for (std::size_t b = 0; b < cir.mag.size(); ++b)
        f << (cir.base + static_cast<sample_t>(b)) - dbg.response.first_path << ","
          << cir.mag[b] << "\n";
    }
  }
  std::fprintf(stderr, "completed %lld/%lld rounds, %lld flagged, final mode %s\n",
               static_cast<long long>(completed), rounds, static_cast<long long>(flagged),
               session.mode() == proto::Mode::hop ? "hop" : "classic");
  return 0;
}

int cmd_analyze(const Args& a) {
  analytics::AnalyticParams p;
  p.n_taps = static_cast<int>(a.get_i("n", a.get_i("taps", 64)));
  const std::vector<double> ratios = mc::parse_range(a.get("theta-over-x", "0:64:4"));
  const double window = a.get_d("window-us", 0.641);
  const double aim = a.get_d("aim-us", 0.05);
  const double hop = a.get_d("hop-us", 5.0);
  require(hop > 0.0, "analyze: --hop-us must be positive");
  p.window_lo_us = 0.0;
  p.window_hi_us = window;
  p.aim_lo_us = window / 2 - aim / 2;
  p.aim_hi_us = window / 2 + aim / 2;
  p.hop_lo_us = 0.0;
  p.hop_hi_us = hop;

  std::printf("theta_over_x,p_exact,p_hoeffding,p_windowed,p_hopped,hop_gain\n");
  for (double r : ratios) {
    p.theta_over_x = r;
    std::printf("%g,%.9g,%.9g,%.9g,%.9g,%.9g\n", r,
                analytics::p_success_exact(p.n_taps, p.theta_over_x),
                analytics::p_success_hoeffding(p.n_taps, p.theta_over_x),
                analytics::p_success_windowed(p), analytics::p_success_hopped(p),
                analytics::hop_gain(p));
  }
  return 0;
}

int cmd_selftest() {
  int failures = 0;
  auto check = [&](bool ok, const char* name) {
    std::printf("%s: %s\n", ok ? "ok" : "FAIL", name);
    if (!ok) ++failures;
  };

  {  // FIPS-197 appendix C-ish: zero key, zero block
    const std::uint8_t key[16] = {};
    const std::uint8_t in[16] = {};
    std::uint8_t out[16];
    Aes128(key).encrypt(in, out);
    const std::uint8_t want[16] = {0x66, 0xE9, 0x4B, 0xD4, 0xEF, 0x8A, 0x2C, 0x3B,
                                   0x88, 0x4C, 0xFA, 0x59, 0xCA, 0x34, 0x2B, 0x2E};
    check(std::memcmp(out, want, 16) == 0, "aes128 known vector");
  }
  {
    const char* s = "123456789";
    check(phy::crc16_ccitt(reinterpret_cast<const std::uint8_t*>(s), 9) == 0x29B1,
          "crc16 check value");
  }
  {
    int active = 0;
    for (auto c : phy::preamble_code()) active += c != 0;
    check(active == 64, "preamble code has 64 active chips");
  }
  {
    const double p = analytics::p_success_exact(64, 0.0);
    const double want = 1.0 - 1832624140942590534.0 / 18446744073709551616.0;
    check(std::abs(p - want) < 1e-9, "threshold-free ghost probability");
  }
  {
    proto::Scenario sc;
    sc.snr_db = std::numeric_limits<double>::infinity();
    phy::Counter128 c;
    c.lo = 42;
    const proto::RoundResult classic =
        proto::run_round(sc, proto::Mode::classic, nullptr, 7, c);
    const proto::RoundResult hop = proto::run_round(sc, proto::Mode::hop, nullptr, 7, c);
    check(classic.completed && std::abs(classic.d_hat - sc.distance_m) < 0.16,
          "noise-free ranging within one sample quantum");
    check(hop.completed && std::abs(hop.d_hat - classic.d_hat) < kMetersPerSample,
          "hop delay cancels out of the estimate");
  }
  {
    proto::Scenario sc;
    phy::Counter128 c;
    c.lo = 43;
    const proto::RoundResult r = proto::run_round(sc, proto::Mode::classic, nullptr, 11, c);
    check(r.completed && std::abs(r.d_hat - sc.distance_m) < 0.30,
          "ranging at the default noise level");
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) return usage(std::cerr, 2);
  const std::string cmd = argv[1];
  try {
    const Args a = parse_args(argc, argv, 2);
    if (a.flags.count("help")) return usage(std::cout, 0);
    if (cmd == "simulate") return cmd_simulate(a);
    if (cmd == "sweep") return cmd_sweep(a);
    if (cmd == "range") return cmd_range(a);
    if (cmd == "analyze") return cmd_analyze(a);
    if (cmd == "selftest") return cmd_selftest();
    if (cmd == "--help" || cmd == "help") return usage(std::cout, 0);
    std::cerr << "unknown command: " << cmd << "\n";
    return usage(std::cerr, 2);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
