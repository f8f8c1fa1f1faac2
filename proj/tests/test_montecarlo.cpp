#include <gtest/gtest.h>

#include <cmath>

#include "umac/montecarlo.hpp"
#include "umac/scenario.hpp"

using namespace umac;

namespace {

// Each user independently missed with probability p.
Scenario bernoulli(double p) {
  Scenario s;
  s.label = "bernoulli";
  s.channel = "none";
  s.trial = [p](std::size_t ka, double, std::uint64_t seed) {
    Rng rng(seed);
    TrialOutcome o;
    o.users = ka;
    for (std::size_t u = 0; u < ka; ++u)
      if (rng.uniform() < p) ++o.missed;
    return o;
  };
  return s;
}

// Every user is decoded iff snr_db >= step.
Scenario step(double step_db) {
  Scenario s;
  s.label = "step";
  s.channel = "none";
  s.trial = [step_db](std::size_t ka, double snr_db, std::uint64_t) {
    return TrialOutcome{ka, snr_db >= step_db ? 0 : ka, 0};
  };
  return s;
}

std::shared_ptr<const TwoStepProtocol> small_twostep(CodecModel model, std::size_t codeword_bits = 128) {
  TwoStepConfig cfg;
  cfg.preamble.size = 8;
  cfg.preamble.base_length = 31;
  cfg.preamble.repetitions = 1;
  cfg.n_occasions = 8;
  cfg.codec.model = model;
  cfg.codec.payload_bits = 8;
  cfg.codec.codeword_bits = codeword_bits;
  cfg.codec.target_eps = 0.1;
  cfg.occasion_len = codeword_bits / 2;
  return std::make_shared<const TwoStepProtocol>(cfg, 3);
}

}  // namespace

TEST(Wilson, Basics) {
  auto ci = wilson_interval(0.0, 100);
  EXPECT_EQ(ci.low, 0.0);
  EXPECT_GT(ci.high, 0.0);
  ci = wilson_interval(0.5, 100);
  EXPECT_NEAR(0.5 - ci.low, ci.high - 0.5, 1e-12);
  auto none = wilson_interval(0.3, 0);
  EXPECT_EQ(none.low, 0.0);
  EXPECT_EQ(none.high, 1.0);
}

TEST(Wilson, Coverage) {
  // With K_a = 1 each trial is one Bernoulli draw.
  const Scenario s = bernoulli(0.05);
  int covered = 0;
  const int meta = 1000;
  for (int m = 0; m < meta; ++m) {
    auto e = estimate_pupe(s, 1, 0.0, 400, 10000 + m, 1);
    if (e.ci_low <= 0.05 && 0.05 <= e.ci_high) ++covered;
  }
  EXPECT_GE(covered, 930);
  EXPECT_LE(covered, 970);
}

TEST(EstimatePupe, MeanAndStdError) {
  const Scenario s = bernoulli(0.2);
  auto e = estimate_pupe(s, 10, 0.0, 5000, 1);
  EXPECT_NEAR(e.pupe, 0.2, 4.0 * e.std_error);
  // Per-trial fraction of 10 users has variance p(1-p)/10.
  EXPECT_NEAR(e.std_error, std::sqrt(0.2 * 0.8 / 10.0 / 5000.0), 2e-4);
  EXPECT_LE(e.ci_low, e.pupe);
  EXPECT_GE(e.ci_high, e.pupe);
  EXPECT_EQ(e.trials, 5000u);
  EXPECT_EQ(e.seed, 1u);
}

TEST(EstimatePupe, ThreadCountDoesNotMatter) {
  const Scenario s = bernoulli(0.3);
  auto a = estimate_pupe(s, 7, 0.0, 333, 99, 1);
  auto b = estimate_pupe(s, 7, 0.0, 333, 99, 4);
  EXPECT_EQ(a.pupe, b.pupe);
  EXPECT_EQ(a.std_error, b.std_error);
  EXPECT_EQ(a.ci_low, b.ci_low);
}

TEST(EstimatePupe, Errors) {
  const Scenario s = bernoulli(0.3);
  EXPECT_THROW(estimate_pupe(s, 1, 0.0, 0, 1), ConfigError);
  EXPECT_THROW(estimate_pupe(s, 0, 0.0, 10, 1), ConfigError);
  Scenario empty;
  empty.label = "nope";
  EXPECT_THROW(estimate_pupe(empty, 1, 0.0, 10, 1), ConfigError);
}

TEST(EstimatePupe, NoiselessSingleUserNeverMisses) {
  auto proto = small_twostep(CodecModel::OracleThreshold);
  const Scenario s = make_scenario(proto, ChannelModel::AWGN, ReceiverMode::TIN, "t");
  auto e = estimate_pupe(s, 1, 40.0, 200, 5);
  EXPECT_EQ(e.pupe, 0.0);
}

TEST(EstimatePupe, NoNoiseMarginMeansEverythingMissed) {
  auto proto = small_twostep(CodecModel::OracleThreshold);
  const Scenario s = make_scenario(proto, ChannelModel::AWGN, ReceiverMode::TIN_SIC, "t");
  auto e = estimate_pupe(s, 3, -60.0, 100, 5);
  EXPECT_EQ(e.pupe, 1.0);
}

TEST(MinSnr, StepScenario) {
  SearchParams sp;
  sp.snr_lo_db = -10.0;
  sp.snr_hi_db = 20.0;
  sp.tol_db = 0.1;
  sp.trials_schedule = {5};
  auto p = min_snr_for_pupe(step(3.3), 4, 0.05, sp, 1);
  ASSERT_TRUE(p.found);
  EXPECT_GE(p.min_snr_db, 3.3);
  EXPECT_LE(p.min_snr_db, 3.3 + 0.1);
  EXPECT_EQ(p.achieved_pupe, 0.0);
  EXPECT_FALSE(p.non_monotone);
}

TEST(MinSnr, OracleSingleUserThreshold) {
  // A single oracle-coded user in AWGN succeeds iff SNR >= codec threshold.
  // Four channel uses put the threshold well above the preamble detection
  // limit, so the codec alone decides.
  auto proto = small_twostep(CodecModel::OracleThreshold, 8);
  const Scenario s = make_scenario(proto, ChannelModel::AWGN, ReceiverMode::TIN, "t");
  const double s_star = linear_to_db(proto->codec().threshold());
  SearchParams sp;
  sp.snr_lo_db = -20.0;
  sp.snr_hi_db = 30.0;
  sp.tol_db = 0.1;
  sp.trials_schedule = {50};
  auto p = min_snr_for_pupe(s, 1, 0.05, sp, 2);
  ASSERT_TRUE(p.found);
  EXPECT_NEAR(p.min_snr_db, s_star, 0.1 + 1e-9);
}

TEST(MinSnr, NotFound) {
  SearchParams sp;
  sp.trials_schedule = {5};
  auto p = min_snr_for_pupe(step(25.0), 2, 0.05, sp, 1);
  EXPECT_FALSE(p.found);
  EXPECT_TRUE(std::isinf(p.min_snr_db));
  EXPECT_EQ(p.achieved_pupe, 1.0);
  EXPECT_EQ(p.snr_max_db, 20.0);
}

TEST(MinSnr, TargetOneReturnsLowerBound) {
  SearchParams sp;
  auto p = min_snr_for_pupe(step(5.0), 2, 1.0, sp, 1);
  EXPECT_TRUE(p.found);
  EXPECT_EQ(p.min_snr_db, sp.snr_lo_db);
  EXPECT_EQ(p.probes, 0u);
}

TEST(MinSnr, LowerBoundAlreadyGood) {
  SearchParams sp;
  sp.trials_schedule = {3};
  auto p = min_snr_for_pupe(step(-50.0), 2, 0.05, sp, 1);
  EXPECT_TRUE(p.found);
  EXPECT_EQ(p.min_snr_db, sp.snr_lo_db);
  EXPECT_EQ(p.probes, 2u);
}

TEST(MinSnr, TighterToleranceStaysClose) {
  Scenario s;
  s.label = "smooth";
  s.channel = "none";
  // Miss probability falls smoothly with SNR.
  s.trial = [](std::size_t ka, double snr_db, std::uint64_t seed) {
    Rng rng(seed);
    const double p = 1.0 / (1.0 + std::exp(snr_db - 4.0));
    TrialOutcome o{ka, 0, 0};
    for (std::size_t u = 0; u < ka; ++u)
      if (rng.uniform() < p) ++o.missed;
    return o;
  };
  SearchParams coarse;
  coarse.tol_db = 0.5;
  coarse.trials_schedule = {400, 2000};
  SearchParams fine = coarse;
  fine.tol_db = 0.1;
  auto a = min_snr_for_pupe(s, 5, 0.1, coarse, 7);
  auto b = min_snr_for_pupe(s, 5, 0.1, fine, 7);
  ASSERT_TRUE(a.found && b.found);
  EXPECT_LE(std::abs(a.min_snr_db - b.min_snr_db), 0.5);
}

TEST(MinSnr, FlagsNonMonotone) {
  Scenario s;
  s.label = "bump";
  s.channel = "none";
  // Half the users missed at low SNR, all of them in a band above, none at the top.
  s.trial = [](std::size_t ka, double snr_db, std::uint64_t) {
    if (snr_db < 0.0) return TrialOutcome{ka, ka / 2, 0};
    if (snr_db < 15.0) return TrialOutcome{ka, ka, 0};
    return TrialOutcome{ka, 0, 0};
  };
  SearchParams sp;
  sp.snr_lo_db = -10.0;
  sp.snr_hi_db = 20.0;
  sp.trials_schedule = {20};
  auto p = min_snr_for_pupe(s, 2, 0.05, sp, 1);
  EXPECT_TRUE(p.found);
  EXPECT_TRUE(p.non_monotone);

  auto clean = min_snr_for_pupe(step(3.0), 2, 0.05, sp, 1);
  EXPECT_FALSE(clean.non_monotone);
}

TEST(MinSnr, InvalidSearch) {
  SearchParams sp;
  sp.snr_lo_db = 5.0;
  sp.snr_hi_db = 5.0;
  EXPECT_THROW(min_snr_for_pupe(step(0.0), 1, 0.05, sp, 1), ConfigError);
  sp = {};
  sp.trials_schedule.clear();
  EXPECT_THROW(min_snr_for_pupe(step(0.0), 1, 0.05, sp, 1), ConfigError);
  sp = {};
  sp.tol_db = 0.0;
  EXPECT_THROW(min_snr_for_pupe(step(0.0), 1, 0.05, sp, 1), ConfigError);
}

TEST(Sweep, Basics) {
  SearchParams sp;
  sp.trials_schedule = {5};
  const Scenario s = step(2.0);
  std::vector<std::size_t> none;
  EXPECT_TRUE(run_sweep(s, none, 0.05, sp, 1).empty());

  std::vector<std::size_t> one{3};
  auto sweep = run_sweep(s, one, 0.05, sp, 1);
  auto direct = min_snr_for_pupe(s, 3, 0.05, sp, mix_seed(1, 3));
  ASSERT_EQ(sweep.size(), 1u);
  EXPECT_EQ(sweep[0].min_snr_db, direct.min_snr_db);
  EXPECT_EQ(sweep[0].seed, direct.seed);
}

TEST(Sweep, SeedDeterminism) {
  auto proto = small_twostep(CodecModel::MLRandomGaussian);
  const Scenario s = make_scenario(proto, ChannelModel::AWGN, ReceiverMode::TIN_SIC, "t");
  SearchParams sp;
  sp.snr_lo_db = -5.0;
  sp.snr_hi_db = 15.0;
  sp.tol_db = 0.5;
  sp.trials_schedule = {20, 40};
  std::vector<std::size_t> kas{2, 4};
  auto a = run_sweep(s, kas, 0.2, sp, 9);
  auto b = run_sweep(s, kas, 0.2, sp, 9);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].found, b[i].found);
    EXPECT_EQ(a[i].min_snr_db, b[i].min_snr_db);
    EXPECT_EQ(a[i].achieved_pupe, b[i].achieved_pupe);
  }
}

TEST(TrialSeeds, IndependentOfSnr) {
  // Same trial seed gives the same users and noise at every SNR.
  auto proto = small_twostep(CodecModel::MLRandomGaussian);
  auto a = simulate_transmission(*proto, ChannelModel::RayleighQuasiStatic, 3, 0.0, 42);
  auto b = simulate_transmission(*proto, ChannelModel::RayleighQuasiStatic, 3, 10.0, 42);
  for (std::size_t u = 0; u < 3; ++u) {
    EXPECT_EQ(a.records[u].message, b.records[u].message);
    EXPECT_EQ(a.records[u].preamble, b.records[u].preamble);
    EXPECT_EQ(a.records[u].gain, b.records[u].gain);
  }
}
