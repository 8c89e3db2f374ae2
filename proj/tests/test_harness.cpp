// Monte Carlo harness determinism, sweep bookkeeping, CSV and config parsing.

#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include "hopguard/config.hpp"
#include "hopguard/harness.hpp"

using namespace hopguard;

TEST(Trial, BitIdenticalAcrossRuns) {
  proto::Scenario sc;
  adv::AdversaryConfig atk;
  for (std::uint64_t i : {0ull, 1ull, 17ull}) {
    const auto a = mc::run_trial(sc, proto::Mode::classic, &atk, -26.0, -1.0, 1, i);
    const auto b = mc::run_trial(sc, proto::Mode::classic, &atk, -26.0, -1.0, 1, i);
    EXPECT_EQ(a.completed, b.completed);
    EXPECT_EQ(a.success, b.success);
    EXPECT_EQ(a.flagged, b.flagged);
    EXPECT_EQ(a.d_hat, b.d_hat);  // bit-identical, not merely close
  }
}

TEST(Trial, SuccessMeansCompletedBelowThreshold) {
  proto::Scenario sc;
  sc.snr_db = 40.0;  // clean, exact: d_hat ~ 10.06 m
  const auto tight = mc::run_trial(sc, proto::Mode::classic, nullptr, 0.0, 0.0, 1, 0, 5.0);
  ASSERT_TRUE(tight.completed);
  EXPECT_FALSE(tight.success);  // honest 10 m range is not "reduced below 5 m"
  const auto loose = mc::run_trial(sc, proto::Mode::classic, nullptr, 0.0, 0.0, 1, 0, 100.0);
  ASSERT_TRUE(loose.completed);
  EXPECT_TRUE(loose.success);
  EXPECT_EQ(tight.d_hat, loose.d_hat);  // threshold only relabels the verdict
}

TEST(Cell, SerialAndThreadedCountsAgree) {
  proto::Scenario sc;
  const auto serial = mc::run_cell(sc, proto::Mode::classic, true, -26.0, -1.0, 64, 1, 1);
  const auto pooled = mc::run_cell(sc, proto::Mode::classic, true, -26.0, -1.0, 64, 1, 4);
  EXPECT_EQ(serial.trials, 64);
  EXPECT_EQ(pooled.trials, 64);
  EXPECT_EQ(serial.successes, pooled.successes);
  EXPECT_EQ(serial.failures, pooled.failures);
  EXPECT_EQ(serial.detections, pooled.detections);
  EXPECT_GT(serial.successes, 0);  // the headline cell does succeed sometimes

  EXPECT_THROW(mc::run_cell(sc, proto::Mode::classic, true, -26.0, -1.0, 0, 1),
               std::invalid_argument);
}

TEST(Cell, ThreadCapComesFromEnvironment) {
  unsetenv("UWB_HOPGUARD_THREADS");
  EXPECT_EQ(mc::resolve_threads(8), 8);
  EXPECT_EQ(mc::resolve_threads(1), 1);
  EXPECT_GE(mc::resolve_threads(0), 1);  // hardware default, at least one

  setenv("UWB_HOPGUARD_THREADS", "2", 1);
  EXPECT_EQ(mc::resolve_threads(8), 2);
  EXPECT_EQ(mc::resolve_threads(1), 1);  // cap, not floor

  setenv("UWB_HOPGUARD_THREADS", "0", 1);  // non-positive: ignored
  EXPECT_EQ(mc::resolve_threads(8), 8);
  unsetenv("UWB_HOPGUARD_THREADS");
}

TEST(Sweep, CellsAreIndependentOfGridShape) {
  proto::Scenario sc;
  mc::SweepSpec grid;
  grid.sir_db = {-26.0, -24.0};
  grid.tsy_us = {-1.0};
  grid.trials = 30;
  grid.threads = 1;
  const auto rows = mc::run_sweep(sc, grid);
  ASSERT_EQ(rows.size(), 2u);

  for (const auto& row : rows) {
    mc::SweepSpec single = grid;
    single.sir_db = {row.sir_db};
    single.tsy_us = {row.tsy_us};
    const auto alone = mc::run_sweep(sc, single);
    ASSERT_EQ(alone.size(), 1u);
    EXPECT_EQ(alone[0].cell.successes, row.cell.successes) << row.sir_db;
    EXPECT_EQ(alone[0].cell.failures, row.cell.failures) << row.sir_db;
    EXPECT_EQ(alone[0].cell.detections, row.cell.detections) << row.sir_db;
  }
}

TEST(Sweep, ResumeReusesMatchingCellsVerbatim) {
  proto::Scenario sc;
  mc::SweepSpec spec;
  spec.sir_db = {-26.0};
  spec.tsy_us = {-1.0, 0.0};
  spec.trials = 20;
  spec.threads = 1;
  const auto fresh = mc::run_sweep(sc, spec);

  // a resumed run trusts rows with the right trial count and never recomputes
  std::vector<mc::SweepRow> have = {fresh[0]};
  have[0].cell.successes = 19;  // deliberately wrong: proves verbatim reuse
  const auto resumed = mc::run_sweep(sc, spec, have);
  ASSERT_EQ(resumed.size(), 2u);
  EXPECT_EQ(resumed[0].cell.successes, 19);
  EXPECT_EQ(resumed[1].cell.successes, fresh[1].cell.successes);

  // a row with a stale trial count is recomputed
  have[0].cell.trials = 10;
  const auto recomputed = mc::run_sweep(sc, spec, have);
  EXPECT_EQ(recomputed[0].cell.successes, fresh[0].cell.successes);
  EXPECT_EQ(recomputed[0].cell.trials, spec.trials);
}

TEST(Csv, RoundTripSkipsBannerAndHeader) {
  std::vector<mc::SweepRow> rows(2);
  rows[0].sir_db = -26.0;
  rows[0].tsy_us = -1.0;
  rows[0].cell = {2000, 650, 720, 610};
  rows[1].sir_db = -20.0;
  rows[1].tsy_us = 2.5;
  rows[1].cell = {2000, 0, 1999, 1};

  std::ostringstream os;
  mc::write_sweep_csv(os, rows, "run banner");
  const std::string text = os.str();
  EXPECT_EQ(text.rfind("# run banner\n", 0), 0u);
  EXPECT_NE(text.find(mc::kCsvHeader), std::string::npos);

  std::istringstream is(text);
  const auto back = mc::read_sweep_csv(is);
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back[i].sir_db, rows[i].sir_db);
    EXPECT_EQ(back[i].tsy_us, rows[i].tsy_us);
    EXPECT_EQ(back[i].cell.trials, rows[i].cell.trials);
    EXPECT_EQ(back[i].cell.successes, rows[i].cell.successes);
    EXPECT_EQ(back[i].cell.failures, rows[i].cell.failures);
    EXPECT_EQ(back[i].cell.detections, rows[i].cell.detections);
  }

  std::istringstream empty("# only a banner\n" + std::string(mc::kCsvHeader) + "\n");
  EXPECT_TRUE(mc::read_sweep_csv(empty).empty());
}

TEST(ParseRange, SingleValuesAndGrids) {
  EXPECT_EQ(mc::parse_range("5"), std::vector<double>({5.0}));
  EXPECT_EQ(mc::parse_range("-26"), std::vector<double>({-26.0}));
  EXPECT_EQ(mc::parse_range("0:2:0.5"), std::vector<double>({0.0, 0.5, 1.0, 1.5, 2.0}));
  EXPECT_EQ(mc::parse_range("-20:-30:2"),
            std::vector<double>({-20.0, -22.0, -24.0, -26.0, -28.0, -30.0}));
  EXPECT_EQ(mc::parse_range("-20:-30:-2"), mc::parse_range("-20:-30:2"));  // sign from span

  // inclusive upper bound despite accumulated rounding
  const auto r = mc::parse_range("0:0.3:0.1");
  ASSERT_EQ(r.size(), 4u);
  EXPECT_NEAR(r.back(), 0.3, 1e-12);

  const auto tsy = mc::parse_range("-2.5:2.5:0.5");
  EXPECT_EQ(tsy.size(), 11u);
}

TEST(ParseRange, RejectsMalformedText) {
  EXPECT_THROW(mc::parse_range("1:2"), std::invalid_argument);
  EXPECT_THROW(mc::parse_range("1:2:3:4"), std::invalid_argument);
  EXPECT_THROW(mc::parse_range("abc"), std::invalid_argument);
  EXPECT_THROW(mc::parse_range("1:x:2"), std::invalid_argument);
  EXPECT_THROW(mc::parse_range("0:1:0"), std::invalid_argument);
  EXPECT_THROW(mc::parse_range("5z"), std::invalid_argument);
}

TEST(Config, MinimalFileKeepsDefaults) {
  std::istringstream is("config_version = 1\n");
  const auto cfg = mc::load_experiment_config(is);
  EXPECT_EQ(cfg.sweep.trials, 2000);
  EXPECT_EQ(cfg.sweep.master, 1u);
  EXPECT_EQ(cfg.sweep.mode, proto::Mode::classic);
  EXPECT_FALSE(cfg.auto_switch);
  EXPECT_EQ(cfg.sweep.sir_db.size(), 6u);
  EXPECT_EQ(cfg.sweep.tsy_us.size(), 11u);
  EXPECT_EQ(cfg.scenario.distance_m, 10.0);
  EXPECT_EQ(cfg.scenario.snr_db, -10.0);
  EXPECT_EQ(cfg.scenario.hops.entries.size(), 32u);
}

TEST(Config, KeysOverrideAndUnitsAreExplicit) {
  std::istringstream is(
      "# comment line\n"
      "config_version = 1\n"
      "trial_count = 500      # trailing comment\n"
      "master_seed = 99\n"
      "mode = hop\n"
      "snr_db = -6\n"
      "sir_db = -24:-28:2\n"
      "tsy_us = -1\n"
      "true_distance_m = 7.5\n"
      "success_threshold_m = 4\n"
      "reply_us = 250\n"
      "sts_key_hex = 000102030405060708090a0b0c0d0e0f\n"
      "hop_min_us = 16\n"
      "hop_max_us = 18\n"
      "hop_entries = 8\n"
      "btw_samples = 300\n"
      "detect_gamma = 0.85\n"
      "attack_spreading = 7\n");
  const auto cfg = mc::load_experiment_config(is);
  EXPECT_EQ(cfg.sweep.trials, 500);
  EXPECT_EQ(cfg.sweep.master, 99u);
  EXPECT_EQ(cfg.sweep.mode, proto::Mode::hop);
  EXPECT_EQ(cfg.sweep.sir_db, std::vector<double>({-24.0, -26.0, -28.0}));
  EXPECT_EQ(cfg.sweep.tsy_us, std::vector<double>({-1.0}));
  EXPECT_EQ(cfg.sweep.success_below_m, 4.0);
  EXPECT_EQ(cfg.scenario.distance_m, 7.5);
  EXPECT_EQ(cfg.scenario.snr_db, -6.0);
  EXPECT_EQ(cfg.scenario.reply_us, 250.0);
  for (int i = 0; i < 16; ++i) EXPECT_EQ(cfg.scenario.key[static_cast<std::size_t>(i)], i);
  ASSERT_EQ(cfg.scenario.hops.entries.size(), 8u);
  EXPECT_EQ(cfg.scenario.hops.entries.front(), us_to_samples(16.0));
  EXPECT_EQ(cfg.scenario.hops.entries.back(), us_to_samples(18.0));
  EXPECT_EQ(cfg.scenario.rcfg.btw, 300);
  EXPECT_EQ(cfg.scenario.detect_gamma, 0.85);
  EXPECT_EQ(cfg.scenario.attack_frame.spreading, 7);
}

TEST(Config, AutoModeStartsClassicWithSwitchArmed) {
  std::istringstream is("config_version = 1\nmode = auto\n");
  const auto cfg = mc::load_experiment_config(is);
  EXPECT_EQ(cfg.sweep.mode, proto::Mode::classic);
  EXPECT_TRUE(cfg.auto_switch);
}

TEST(Config, RejectsBrokenFiles) {
  auto reject = [](const std::string& text) {
    std::istringstream is(text);
    EXPECT_THROW(mc::load_experiment_config(is), std::invalid_argument) << text;
  };
  reject("");                                         // missing version
  reject("trial_count = 10\n");                       // missing version
  reject("config_version = 2\n");                     // unsupported version
  reject("config_version = 1\nno_such_key = 1\n");    // typo must not be silent
  reject("config_version = 1\nmode = turbo\n");
  reject("config_version = 1\ntrial_count\n");        // no '='
  reject("config_version = 1\ntrial_count = ten\n");
  reject("config_version = 1\nsts_key_hex = 0011\n"); // short key
  reject("config_version = 1\nsts_key_hex = 000102030405060708090a0b0c0d0eZZ\n");
  reject("config_version = 1\nhop_min_us = 1\n");     // inside the vulnerable span
}

TEST(Config, RunExperimentSmoke) {
  std::istringstream is(
      "config_version = 1\n"
      "trial_count = 5\n"
      "threads = 1\n"
      "sir_db = -26\n"
      "tsy_us = -1\n");
  const auto cfg = mc::load_experiment_config(is);
  const auto rows = mc::run_experiment(cfg);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].sir_db, -26.0);
  EXPECT_EQ(rows[0].tsy_us, -1.0);
  EXPECT_EQ(rows[0].cell.trials, 5);
}
