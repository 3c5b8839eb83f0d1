#include "shardgame/sim.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "shardgame/equilibrium.hpp"
#include "shardgame/errors.hpp"

namespace shardgame {
namespace {

constexpr auto C = Strategy::Cooperate;
constexpr auto D = Strategy::Defect;

SimConfig base_config() {
  SimConfig c;
  c.target_n = 1000;
  c.committee_size = 100;
  c.tau = TauRule::of_absolute(51);
  c.avg_tx = 1000;
  c.divergence_rate = 0.15;
  c.costs = {10, 5, 0.01};
  c.rewards = {2000, 1.05};
  c.iterations = 4;
  c.seed = 7;
  return c;
}

TEST(TauRule, Kinds) {
  EXPECT_EQ(TauRule::majority().apply(100), 51u);
  EXPECT_EQ(TauRule::majority().apply(99), 50u);
  EXPECT_EQ(TauRule::of_fraction(0.5).apply(101), 51u);
  EXPECT_EQ(TauRule::of_fraction(0.001).apply(10), 1u);
  EXPECT_EQ(TauRule::of_absolute(51).apply(60), 51u);
  EXPECT_THROW(TauRule::of_absolute(51).apply(50), ShapeError);
  EXPECT_EQ(TauRule::of_fraction(0.66).to_string(), "0.66");
  EXPECT_EQ(TauRule::of_absolute(7).to_string(), "7");
}

TEST(SimConfig, Validation) {
  auto c = base_config();
  EXPECT_NO_THROW(c.validate());
  c.committee_size = 50;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = base_config();
  c.divergence_rate = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = base_config();
  c.iterations = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(EpochSeed, DistinctPerPointAndIteration) {
  EXPECT_EQ(epoch_seed(1, 2, 3), epoch_seed(1, 2, 3));
  EXPECT_NE(epoch_seed(1, 2, 3), epoch_seed(1, 3, 2));
  EXPECT_NE(epoch_seed(1, 0, 0), epoch_seed(2, 0, 0));
}

TEST(GenerateEpoch, DeterministicPerSeed) {
  const auto c = base_config();
  const auto a = generate_epoch(c, 42);
  const auto b = generate_epoch(c, 42);
  ASSERT_EQ(a.num_processors(), b.num_processors());
  for (std::size_t i = 0; i < a.num_processors(); ++i) {
    EXPECT_EQ(a.tx_count(i), b.tx_count(i));
    EXPECT_EQ(a.aligned(i), b.aligned(i));
  }
  const auto other = generate_epoch(c, 43);
  bool differs = other.num_processors() != a.num_processors();
  for (std::size_t i = 0; !differs && i < a.num_processors(); ++i) differs = a.tx_count(i) != other.tx_count(i);
  EXPECT_TRUE(differs);
}

TEST(GenerateEpoch, ShapeFollowsConfig) {
  const auto c = base_config();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto e = generate_epoch(c, seed);
    EXPECT_EQ(e.num_shards(), 10u);
    EXPECT_NEAR(static_cast<double>(e.num_processors()), 1000.0, 25.0);
    for (std::size_t j = 0; j < e.num_shards(); ++j) {
      EXPECT_EQ(e.shape().threshold(j), 51u);
      EXPECT_GE(e.shape().committee_size(j), 98u);
      EXPECT_LE(e.shape().committee_size(j), 103u);
      EXPECT_NEAR(static_cast<double>(e.consensus_tx_count(j)), 1000.0, 10.0);
    }
    for (std::size_t i = 0; i < e.num_processors(); ++i) {
      if (e.aligned(i)) {
        EXPECT_EQ(e.tx_count(i), e.consensus_tx_count(e.shape().shard_of(i)));
      }
    }
  }
}

TEST(GenerateEpoch, NoDivergenceMeansAllAligned) {
  auto c = base_config();
  c.divergence_rate = 0.0;
  const auto e = generate_epoch(c, 3);
  for (std::size_t i = 0; i < e.num_processors(); ++i) EXPECT_TRUE(e.aligned(i));
}

TEST(GenerateEpoch, CommitteeBelowTauThrows) {
  auto c = base_config();
  c.target_n = 50;
  EXPECT_THROW(generate_epoch(c, 1), ShapeError);
}

Game one_shard(std::vector<std::uint64_t> tx, std::vector<bool> aligned, std::size_t tau, CostParams costs,
               RewardParams rewards) {
  const std::size_t n = tx.size();
  return Game{EpochInstance(NetworkShape({n}, {tau}), std::move(tx), {30}, std::move(aligned)), costs, rewards};
}

TEST(FairThresholdProfile, ProfitableGroupCooperates) {
  // Pool 60 over l = 4: 15 - (5 + 3) > 0 for the aligned class; the divergent x = 10 earns more.
  const auto g = one_shard({30, 30, 30, 10}, {true, true, true, false}, 2, {10, 5, 0.1}, {30, 1});
  EXPECT_EQ(fair_threshold_profile(g), StrategyProfile::all(4, C));
}

TEST(FairThresholdProfile, ExpensiveDivergentStaysOut) {
  // x = 200 at l = 3: 20 - 25 < 0.
  const auto g = one_shard({30, 30, 30, 200}, {true, true, true, false}, 2, {10, 5, 0.1}, {30, 1});
  EXPECT_EQ(fair_threshold_profile(g), StrategyProfile({C, C, C, D}));
}

TEST(FairThresholdProfile, AlignedClassLeavesTogether) {
  // Pool 30. At l = 2 every processor profits; at l = 4 the aligned class does
  // not (7.5 - 8), leaves as a whole and the shard loses consensus.
  const auto g = one_shard({30, 30, 5, 5}, {true, true, false, false}, 2, {10, 5, 0.1}, {0, 1});
  EXPECT_EQ(fair_threshold_profile(g), StrategyProfile::all(4, D));
}

TEST(FairThresholdProfile, OneFailingShardSinksTheBlock) {
  // Shard 0: (15 + 30)/2 - 8 > 0. Shard 1: (15 + 300)/3 - 35 > 0.
  const Game g{EpochInstance(NetworkShape({2, 3}, {2, 3}), {30, 30, 300, 300, 300}, {30, 300},
                             {true, true, true, true, true}),
               {10, 5, 0.1},
               {30, 1}};
  EXPECT_EQ(fair_threshold_profile(g), StrategyProfile::all(5, C));
  // One divergent view leaves shard 1 two aligned processors short of tau = 3.
  const Game bad{EpochInstance(NetworkShape({2, 3}, {2, 3}), {30, 30, 300, 300, 7}, {30, 300},
                               {true, true, true, true, false}),
                 {10, 5, 0.1},
                 {30, 1}};
  EXPECT_EQ(fair_threshold_profile(bad), StrategyProfile::all(5, D));
}

TEST(DecideStrategies, UniformThresholdIsAllDefect) {
  auto c = base_config();
  c.scheme = Scheme::Uniform;
  const auto e = generate_epoch(c, 5);
  EXPECT_EQ(decide_strategies(e, c).profile, StrategyProfile::all(e.num_processors(), D));
}

TEST(DecideStrategies, HugeCostsMeanAllDefect) {
  for (auto scheme : {Scheme::Fair, Scheme::IncentiveCompatible}) {
    auto c = base_config();
    c.scheme = scheme;
    c.costs = {10, 1e6, 1.0};
    const auto e = generate_epoch(c, 5);
    EXPECT_EQ(decide_strategies(e, c).profile, StrategyProfile::all(e.num_processors(), D)) << to_string(scheme);
  }
}

TEST(DecideStrategies, IncentiveCompatibleFollowsRecommendations) {
  auto c = base_config();
  c.scheme = Scheme::IncentiveCompatible;
  c.admit_divergent = true;
  const auto e = generate_epoch(c, 9);
  const auto d = decide_strategies(e, c);
  const auto round = run_coordination(Game{e, c.costs, c.rewards}, {true});
  EXPECT_EQ(d.profile, recommended_profile(round.decisions));
  EXPECT_EQ(d.recommendations.size(), e.num_processors());
  EXPECT_EQ(d.announcements.size(), e.num_shards());
}

TEST(DecideStrategies, BestResponseFixedPointsAreNash) {
  gen::Rng rng(11);
  std::size_t converged = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto g = gen::small_game(rng);
    for (auto scheme : {Scheme::Uniform, Scheme::Fair}) {
      SimConfig c;
      c.scheme = scheme;
      c.dynamics = Dynamics::BestResponse;
      c.costs = g.costs;
      c.rewards = g.rewards;
      const auto d = decide_strategies(g.instance, c);
      if (!d.converged) continue;
      ++converged;
      EXPECT_TRUE(is_nash(g, d.profile, scheme).is_nash) << "trial " << trial << " " << to_string(scheme);
    }
  }
  EXPECT_GT(converged, 300u);
}

TEST(DecideStrategies, BestResponseUnderSettlementConvergesToNash) {
  gen::Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = gen::small_game(rng);
    SimConfig c;
    c.scheme = Scheme::IncentiveCompatible;
    c.dynamics = Dynamics::BestResponse;
    c.costs = g.costs;
    c.rewards = g.rewards;
    const auto d = decide_strategies(g.instance, c);
    if (!d.converged) continue;
    const SettlementEvaluator eval(g, d.recommendations, d.profile);
    for (std::size_t i = 0; i < g.instance.num_processors(); ++i) {
      EXPECT_GE(eval.utility(i), eval.utility_if(i, d.profile[i] == C ? D : C)) << "trial " << trial;
    }
  }
}

SweepSpec small_sweep() {
  SweepSpec s;
  s.base = base_config();
  s.base.target_n = 300;
  s.base.iterations = 5;
  s.varying = SweepVariable::AvgTx;
  s.values = {500, 2000, 8000};
  return s;
}

void expect_same(const AggregateResult& a, const AggregateResult& b) {
  EXPECT_EQ(a.sweep_point, b.sweep_point);
  EXPECT_EQ(a.mean_cooperation_ratio, b.mean_cooperation_ratio);
  EXPECT_EQ(a.mean_defection_ratio, b.mean_defection_ratio);
  EXPECT_EQ(a.mean_utility_cooperators, b.mean_utility_cooperators);
  EXPECT_EQ(a.mean_utility_defectors, b.mean_utility_defectors);
  EXPECT_EQ(a.weighted_mean_utility, b.weighted_mean_utility);
  EXPECT_EQ(a.block_commit_rate, b.block_commit_rate);
  EXPECT_EQ(a.failed, b.failed);
}

TEST(RunSweep, IndependentOfWorkerCount) {
  for (auto scheme : {Scheme::Fair, Scheme::IncentiveCompatible}) {
    auto spec = small_sweep();
    spec.base.scheme = scheme;
    const auto one = run_sweep(spec, 1);
    for (std::size_t w : {2u, 4u}) {
      const auto many = run_sweep(spec, w);
      ASSERT_EQ(one.size(), many.size());
      for (std::size_t p = 0; p < one.size(); ++p) expect_same(one[p], many[p]);
    }
  }
}

TEST(RunSweep, SingleIterationMatchesTheEpoch) {
  auto spec = small_sweep();
  spec.base.iterations = 1;
  spec.values = {2000};
  const auto r = run_sweep(spec, 1);
  ASSERT_EQ(r.size(), 1u);
  const auto config = apply_sweep_point(spec, 2000);
  const auto e = generate_epoch(config, epoch_seed(spec.base.seed, 0, 0));
  const auto run = run_epoch(e, config);
  EXPECT_DOUBLE_EQ(r[0].mean_cooperation_ratio, run.outcome.cooperation_ratio);
  EXPECT_EQ(r[0].block_commit_rate, run.outcome.block_committed ? 1.0 : 0.0);
  double total = 0.0;
  for (double u : run.outcome.utility) total += u;
  EXPECT_NEAR(r[0].weighted_mean_utility, total / static_cast<double>(e.num_processors()), 1e-9);
}

TEST(RunSweep, RatiosAndUtilitiesAreConsistent) {
  const auto r = run_sweep(small_sweep(), 2);
  for (const auto& p : r) {
    EXPECT_FALSE(p.failed);
    EXPECT_NEAR(p.mean_cooperation_ratio + p.mean_defection_ratio, 1.0, 1e-12);
    EXPECT_TRUE(std::isfinite(p.weighted_mean_utility));
    EXPECT_EQ(p.iterations, 5u);
  }
}

TEST(RunSweep, InfeasiblePointsAreMarkedFailed) {
  auto spec = small_sweep();
  spec.varying = SweepVariable::NumProcessors;
  spec.values = {50, 300};
  const auto r = run_sweep(spec, 1);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_TRUE(r[0].failed);
  EXPECT_FALSE(r[0].error.empty());
  EXPECT_FALSE(r[1].failed);
}

TEST(RunSweep, InvalidSpecRejected) {
  auto spec = small_sweep();
  spec.values = {2000, 1000};
  EXPECT_THROW(run_sweep(spec), std::invalid_argument);
  spec.values.clear();
  EXPECT_THROW(run_sweep(spec), std::invalid_argument);
}

TEST(RunSweep, LargeNetworksFallBackToMandatoryCost) {
  auto spec = small_sweep();
  spec.base.rewards.block_reward = 5000;
  spec.base.iterations = 3;
  spec.varying = SweepVariable::NumProcessors;
  spec.values = {5000};
  for (auto scheme : {Scheme::Uniform, Scheme::Fair}) {
    spec.base.scheme = scheme;
    const auto r = run_sweep(spec, 2);
    EXPECT_NEAR(r[0].weighted_mean_utility, -10.0, 1e-9) << to_string(scheme);
    EXPECT_EQ(r[0].mean_cooperation_ratio, 0.0);
  }
}

}  // namespace
}  // namespace shardgame
