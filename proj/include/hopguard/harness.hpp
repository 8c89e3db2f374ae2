// Monte Carlo harness.
//
// Determinism contract: a trial is a pure function of (master_seed, sir_db,
// tsy_us, trial_index) — the *values* of the cell coordinates, not their
// position in any grid — so re-running a sweep, removing cells, resuming an
// interrupted file, or spreading trials across threads cannot change a
// single outcome.  Cells aggregate integer counts only, which makes the
// parallel reduction order-independent by construction.

#pragma once

#include <cstdio>
#include <cstdlib>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "adversary.hpp"
#include "common.hpp"
#include "protocol.hpp"
#include "rng.hpp"

namespace hopguard::mc {

struct TrialResult {
  bool completed = false;
  bool success = false;
  bool flagged = false;
  double d_hat = 0.0;
};

inline constexpr double kSuccessBelowM = 5.0;

// One independent ranging round under the cell's attack parameters.
inline TrialResult run_trial(const proto::Scenario& sc, proto::Mode mode,
                             const adv::AdversaryConfig* atk, double sir_key, double tsy_key,
                             std::uint64_t master, std::uint64_t trial_index,
                             double success_below_m = kSuccessBelowM,
                             proto::RoundDebug* dbg = nullptr) {
  const std::uint64_t seed = derive_trial_seed(master, sir_key, tsy_key, trial_index);
  phy::Counter128 ctr;
  ctr.lo = mix64(seed ^ 0xA11CE5ull);
  ctr.hi = mix64(ctr.lo ^ 0xB0B5ull);
  const proto::RoundResult r = proto::run_round(sc, mode, atk, mix64(seed ^ 0x7717ull), ctr, dbg);
  TrialResult t;
  t.completed = r.completed;
  t.d_hat = r.d_hat;
  t.success = r.completed && r.d_hat < success_below_m;
  t.flagged = r.completed && r.flagged != 0;
  return t;
}

struct CellResult {
  std::int64_t trials = 0;
  std::int64_t successes = 0;
  std::int64_t failures = 0;    // aborted rounds
  std::int64_t detections = 0;  // responder flags among completed rounds

  double success_rate() const {
    return trials > 0 ? static_cast<double>(successes) / static_cast<double>(trials) : 0.0;
  }

  CellResult& operator+=(const CellResult& o) {
    trials += o.trials;
    successes += o.successes;
    failures += o.failures;
    detections += o.detections;
    return *this;
  }
};

// Worker count: explicit request, capped by the UWB_HOPGUARD_THREADS
// environment variable, defaulting to the hardware concurrency.
inline int resolve_threads(int requested = 0) {
  int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* env = std::getenv("UWB_HOPGUARD_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0 && cap < n) n = cap;
  }
  return n;
}

inline CellResult run_cell(const proto::Scenario& sc, proto::Mode mode, bool attack_on,
                           double sir_db, double tsy_us, std::int64_t trials,
                           std::uint64_t master, int threads = 0,
                           double success_below_m = kSuccessBelowM) {
  require(trials > 0, "run_cell: trials must be positive");
  const int nthreads = resolve_threads(threads);
  adv::AdversaryConfig atk{sir_db, tsy_us};

  auto chunk = [&](std::int64_t lo, std::int64_t hi, CellResult& out) {
    CellResult acc;
    for (std::int64_t i = lo; i < hi; ++i) {
      const TrialResult t = run_trial(sc, mode, attack_on ? &atk : nullptr, sir_db, tsy_us,
                                      master, static_cast<std::uint64_t>(i), success_below_m);
      ++acc.trials;
      if (!t.completed) ++acc.failures;
      if (t.success) ++acc.successes;
      if (t.flagged) ++acc.detections;
    }
    out = acc;
  };

  if (nthreads == 1) {
    CellResult acc;
    chunk(0, trials, acc);
    return acc;
  }

  std::vector<CellResult> parts(static_cast<std::size_t>(nthreads));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(nthreads));
  for (int w = 0; w < nthreads; ++w) {
    const std::int64_t lo = trials * w / nthreads;
    const std::int64_t hi = trials * (w + 1) / nthreads;
    pool.emplace_back(chunk, lo, hi, std::ref(parts[static_cast<std::size_t>(w)]));
  }
  for (auto& th : pool) th.join();
  CellResult total;
  for (const auto& p : parts) total += p;
  return total;
}

// ---- sweep over the (sir, tsy) grid ----------------------------------------

struct SweepSpec {
  std::vector<double> sir_db;
  std::vector<double> tsy_us;
  std::int64_t trials = 2000;
  proto::Mode mode = proto::Mode::classic;
  std::uint64_t master = 1;
  int threads = 0;
  double success_below_m = kSuccessBelowM;
};

struct SweepRow {
  double sir_db = 0.0;
  double tsy_us = 0.0;
  CellResult cell;
};

using ProgressFn = std::function<void(std::size_t done, std::size_t total, const SweepRow&)>;

// `have` carries rows from an interrupted run; matching cells are reused
// verbatim.  Because trials are value-seeded, the resumed file is identical
// to an uninterrupted one.
inline std::vector<SweepRow> run_sweep(const proto::Scenario& sc, const SweepSpec& spec,
                                       const std::vector<SweepRow>& have = {},
                                       const ProgressFn& progress = nullptr) {
  require(!spec.sir_db.empty() && !spec.tsy_us.empty(), "run_sweep: empty grid");
  std::map<std::pair<double, double>, SweepRow> done;
  for (const auto& r : have)
    if (r.cell.trials == spec.trials) done[{r.sir_db, r.tsy_us}] = r;

  std::vector<SweepRow> rows;
  rows.reserve(spec.sir_db.size() * spec.tsy_us.size());
  const std::size_t total = spec.sir_db.size() * spec.tsy_us.size();
  for (double sir : spec.sir_db) {
    for (double tsy : spec.tsy_us) {
      SweepRow row;
      if (auto it = done.find({sir, tsy}); it != done.end()) {
        row = it->second;
      } else {
        row.sir_db = sir;
        row.tsy_us = tsy;
        row.cell = run_cell(sc, spec.mode, true, sir, tsy, spec.trials, spec.master,
                            spec.threads, spec.success_below_m);
      }
      rows.push_back(row);
      if (progress) progress(rows.size(), total, rows.back());
    }
  }
  return rows;
}

// ---- CSV --------------------------------------------------------------------

inline constexpr const char* kCsvHeader =
    "sir_db,tsy_us,trials,successes,success_rate,failures,detections";

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows,
                            const std::string& banner = "") {
  if (!banner.empty()) os << "# " << banner << "\n";
  os << kCsvHeader << "\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%g,%g,%lld,%lld,%.6f,%lld,%lld", r.sir_db, r.tsy_us,
                  static_cast<long long>(r.cell.trials), static_cast<long long>(r.cell.successes),
                  r.cell.success_rate(), static_cast<long long>(r.cell.failures),
                  static_cast<long long>(r.cell.detections));
    os << buf << "\n";
  }
}

inline std::vector<SweepRow> read_sweep_csv(std::istream& is) {
  std::vector<SweepRow> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("sir_db", 0) == 0) continue;
    SweepRow r;
    double rate = 0.0;
    long long trials = 0, succ = 0, fail = 0, det = 0;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lld,%lld,%lf,%lld,%lld", &r.sir_db, &r.tsy_us,
                    &trials, &succ, &rate, &fail, &det) == 7) {
      r.cell.trials = trials;
      r.cell.successes = succ;
      r.cell.failures = fail;
      r.cell.detections = det;
      rows.push_back(r);
    }
  }
  return rows;
}

// ---- CLI range syntax: "x" or "start:stop:step" -----------------------------

inline std::vector<double> parse_range(const std::string& text) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == ':') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  auto to_d = [](const std::string& s) {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    require(pos == s.size(), "parse_range: not a number");
    return v;
  };
  if (parts.size() == 1) return {to_d(parts[0])};
  require(parts.size() == 3, "parse_range: expected value or start:stop:step");
  const double start = to_d(parts[0]);
  const double stop = to_d(parts[1]);
  double step = std::abs(to_d(parts[2]));
  require(step > 0.0, "parse_range: step must be nonzero");
  const double dir = stop >= start ? 1.0 : -1.0;
  std::vector<double> out;
  for (double v = start; (v - stop) * dir <= 1e-9; v += dir * step) {
    out.push_back(v);
    require(out.size() <= 100000, "parse_range: range too long");
  }
  return out;
}

}  // namespace hopguard::mc
