#include "shardgame/protocol.hpp"

#include <limits>

#include <gtest/gtest.h>

#include "shardgame/errors.hpp"

namespace shardgame {
namespace {

constexpr auto C = Strategy::Cooperate;
constexpr auto D = Strategy::Defect;
constexpr double kInf = std::numeric_limits<double>::infinity();

Submission submission(std::size_t processor, TransactionView view) {
  return {submit_view_digest(processor, view), view.tx_count};
}

TEST(Coordinate, MajorityGroupProceeds) {
  std::vector<Submission> subs;
  for (std::size_t i = 0; i < 100; ++i) {
    subs.push_back(i < 85 ? submission(i, {1000, 1}) : submission(i, {1000 + i, 100 + i}));
  }
  const auto a = coordinate(0, subs, 51, 1, {10, 5, 0.05}, {1000, 1});
  EXPECT_EQ(a.verdict, Verdict::Proceed);
  EXPECT_EQ(a.l_j, 85u);
  EXPECT_EQ(a.majority_group.size(), 85u);
  EXPECT_EQ(a.cooperative_set, a.majority_group);
  EXPECT_EQ(a.consensus_tx_estimate, 1000u);
  EXPECT_EQ(a.majority_digest, subs[0].view.digest);
  EXPECT_NEAR(a.theta1, (5.0 - 1000.0 / 85) / (1.0 / 85 - 0.05), 1e-9);
  EXPECT_EQ(a.theta1_denominator, Sign::Negative);
}

TEST(Coordinate, SmallLargestGroupMeansAllDefect) {
  std::vector<Submission> subs;
  for (std::size_t i = 0; i < 100; ++i) {
    subs.push_back(i < 40 ? submission(i, {500, 1}) : submission(i, {500, 1000 + i}));
  }
  const auto a = coordinate(0, subs, 51, 1, {10, 5, 0.05}, {1000, 1});
  EXPECT_EQ(a.verdict, Verdict::AllDefect);
  EXPECT_EQ(a.l_j, 40u);
  EXPECT_TRUE(a.cooperative_set.empty());
}

TEST(Coordinate, TieGoesToSmallerDigest) {
  std::vector<Submission> subs{submission(0, {10, 1}), submission(1, {10, 2}), submission(2, {10, 1}),
                               submission(3, {10, 2})};
  const auto a = coordinate(0, subs, 2, 1, {0, 1, 0.1}, {10, 1});
  EXPECT_EQ(a.verdict, Verdict::Proceed);
  const bool first_smaller = subs[0].view.digest < subs[1].view.digest;
  EXPECT_EQ(a.majority_group, first_smaller ? (std::vector<std::size_t>{0, 2}) : (std::vector<std::size_t>{1, 3}));
  // Order of arrival does not matter.
  std::vector<Submission> reversed(subs.rbegin(), subs.rend());
  EXPECT_EQ(coordinate(0, reversed, 2, 1, {0, 1, 0.1}, {10, 1}).majority_group, a.majority_group);
}

TEST(Coordinate, EmptyShardIsMalformed) {
  EXPECT_THROW(coordinate(0, std::vector<Submission>{}, 1, 1, {}, {}), MalformedShardError);
}

TEST(Coordinate, AdmitsCheapDivergentProcessors) {
  // Majority of 3 with |y| = 30; divergent processors hold 10, 20 and 90 txs.
  std::vector<Submission> subs{submission(0, {30, 1}), submission(1, {30, 1}), submission(2, {30, 1}),
                               submission(3, {90, 9}), submission(4, {10, 7}), submission(5, {20, 8})};
  const CostParams costs{10, 5, 0.1};
  const RewardParams rewards{60, 1};
  // Margin at l: (60 + 30)/l - 5 - 0.1 x. Cheapest first; the last one (x = 90, l = 6) clears by 15 - 14.
  const auto all = coordinate(0, subs, 2, 1, costs, rewards, {true});
  EXPECT_EQ(all.cooperative_set, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5}));
  EXPECT_EQ(all.l_j, 6u);
  const auto closed = coordinate(0, subs, 2, 1, costs, rewards, {false});
  EXPECT_EQ(closed.cooperative_set, (std::vector<std::size_t>{0, 1, 2}));

  // Tighter rewards: (24 + 30)/l - 8 for members; l = 5 gives 2.8, l = 6 gives 1 but the
  // x = 90 newcomer would face 9 - 14 < 0.
  const auto some = coordinate(0, subs, 2, 1, costs, {24, 1}, {true});
  EXPECT_EQ(some.cooperative_set, (std::vector<std::size_t>{0, 1, 2, 4, 5}));
}

Announcement proceed(std::vector<std::size_t> members, double theta1, double theta2,
                     Sign denom = Sign::Positive) {
  Announcement a;
  a.verdict = Verdict::Proceed;
  a.majority_group = members;
  a.cooperative_set = members;
  a.l_j = members.size();
  a.theta1 = theta1;
  a.theta2 = theta2;
  a.theta1_denominator = denom;
  return a;
}

TEST(Participate, DecisionRules) {
  const auto a = proceed({0, 1, 2}, -1900, 100);
  auto d = participate(1, a, 1000);
  EXPECT_EQ(d.decision, C);
  EXPECT_EQ(d.reason, Reason::InCooperativeSet);

  d = participate(1, proceed({0, 1, 2}, 5, 100), 3);
  EXPECT_EQ(d.decision, D);
  EXPECT_EQ(d.reason, Reason::BelowTheta1);
  EXPECT_EQ(participate(1, proceed({0, 1, 2}, 5, 100), 5).reason, Reason::BelowTheta1);

  d = participate(7, a, 150);
  EXPECT_EQ(d.decision, D);
  EXPECT_EQ(d.reason, Reason::AboveTheta2);
  EXPECT_EQ(participate(7, a, 50).reason, Reason::NotSelected);

  Announcement none;
  none.verdict = Verdict::AllDefect;
  d = participate(0, none, 10);
  EXPECT_EQ(d.decision, D);
  EXPECT_EQ(d.reason, Reason::AllDefectVerdict);
}

TEST(Participate, NegativeDenominatorFlipsTheta1) {
  // With r/l < c^v cooperation pays only below theta1.
  const auto a = proceed({0, 1}, 40, 60, Sign::Negative);
  EXPECT_EQ(participate(0, a, 39).decision, C);
  EXPECT_EQ(participate(0, a, 40).reason, Reason::BelowTheta1);
  EXPECT_EQ(participate(0, a, 41).reason, Reason::BelowTheta1);
}

TEST(Participate, ZeroDenominator) {
  EXPECT_EQ(participate(0, proceed({0}, -kInf, 10, Sign::Zero), 5).decision, C);
  EXPECT_EQ(participate(0, proceed({0}, kInf, 10, Sign::Zero), 5).reason, Reason::BelowTheta1);
}

TEST(Participate, AdmittedDivergentProcessorCooperates) {
  auto a = proceed({0, 1}, -10, 60);
  a.cooperative_set = {0, 1, 5};
  a.l_j = 3;
  EXPECT_EQ(participate(5, a, 20).decision, C);
  EXPECT_EQ(participate(5, a, 60).reason, Reason::AboveTheta2);
}

// n = 4, tau = 2, everyone aligned on 30 txs; BR = 30, r = 1, c = (10, 5, 0.1).
Game four_aligned() {
  return Game{EpochInstance(NetworkShape({4}, {2}), {30, 30, 30, 30}, {30}, {true, true, true, true}), {10, 5, 0.1},
              {30, 1}};
}

TEST(Settle, CompliantEpochPaysEquation4Shares) {
  const auto g = four_aligned();
  const auto round = run_coordination(g);
  const auto rec = recommended_profile(round.decisions);
  ASSERT_EQ(rec, StrategyProfile::all(4, C));
  const auto ledger = settle(g.instance, round.announcements, round.decisions, rec, g.rewards);
  EXPECT_TRUE(ledger.block_committed);
  for (double r : ledger.reward) EXPECT_DOUBLE_EQ(r, 30.0 / 4 + 30.0 / 4);
  EXPECT_DOUBLE_EQ(ledger.total(), g.rewards.block_reward + total_fees(g.instance, g.rewards));
  const auto u = settled_utilities(g.instance, ledger, rec, g.costs);
  EXPECT_NEAR(u[0], 15.0 - 18.0, 1e-12);
}

TEST(Settle, DisobedientCooperatorGetsNothing) {
  const auto g = four_aligned();
  const auto round = run_coordination(g);
  auto actual = recommended_profile(round.decisions);
  actual.set(2, D);
  const auto ledger = settle(g.instance, round.announcements, round.decisions, actual, g.rewards);
  EXPECT_TRUE(ledger.block_committed);
  EXPECT_EQ(ledger.reward[2], 0.0);
  EXPECT_FALSE(ledger.followed_recommendation[2]);
  EXPECT_DOUBLE_EQ(ledger.reward[0], 10.0 + 10.0);
  EXPECT_DOUBLE_EQ(ledger.total(), 60.0);
}

TEST(Settle, ShardBelowTauPaysNobody) {
  const Game g{EpochInstance(NetworkShape({2}, {2}), {30, 30}, {30}, {true, true}), {10, 5, 0.1}, {30, 1}};
  const auto round = run_coordination(g);
  auto actual = recommended_profile(round.decisions);
  ASSERT_EQ(actual, StrategyProfile::all(2, C));
  actual.set(0, D);
  const auto ledger = settle(g.instance, round.announcements, round.decisions, actual, g.rewards);
  EXPECT_FALSE(ledger.block_committed);
  EXPECT_EQ(ledger.total(), 0.0);
}

TEST(Settle, UnrecommendedCooperatorIsNotPaid) {
  // Processor 3 diverges and is not selected; cooperating anyway earns nothing.
  const Game g{EpochInstance(NetworkShape({4}, {2}), {30, 30, 30, 12}, {30}, {true, true, true, false}),
               {10, 5, 0.1},
               {30, 1}};
  const auto round = run_coordination(g);
  EXPECT_EQ(round.decisions[3].reason, Reason::NotSelected);
  auto actual = recommended_profile(round.decisions);
  actual.set(3, C);
  const auto ledger = settle(g.instance, round.announcements, round.decisions, actual, g.rewards);
  EXPECT_EQ(ledger.reward[3], 0.0);
  EXPECT_DOUBLE_EQ(ledger.reward[0], 20.0);
}

TEST(RecommendEpoch, InfeasibleShardDowngradesEveryone) {
  // Shard 1 has no consensus group of size tau = 2.
  const Game g{EpochInstance(NetworkShape({3, 3}, {2, 2}), {30, 30, 30, 5, 6, 7}, {30, 40},
                             {true, true, true, false, false, false}),
               {10, 5, 0.1},
               {300, 1}};
  const auto round = run_coordination(g);
  EXPECT_EQ(round.announcements[0].verdict, Verdict::Proceed);
  EXPECT_EQ(round.announcements[1].verdict, Verdict::AllDefect);
  for (const auto& d : round.decisions) {
    EXPECT_EQ(d.decision, D);
    EXPECT_EQ(d.reason, Reason::AllDefectVerdict);
  }
  const auto ledger = settle(g.instance, round.announcements, round.decisions,
                             recommended_profile(round.decisions), g.rewards);
  EXPECT_EQ(ledger.total(), 0.0);
}

TEST(RunCoordination, Deterministic) {
  const auto g = four_aligned();
  const auto a = run_coordination(g);
  const auto b = run_coordination(g);
  ASSERT_EQ(a.announcements.size(), b.announcements.size());
  EXPECT_EQ(a.announcements[0].majority_digest, b.announcements[0].majority_digest);
  EXPECT_EQ(a.announcements[0].cooperative_set, b.announcements[0].cooperative_set);
  EXPECT_EQ(recommended_profile(a.decisions), recommended_profile(b.decisions));
}

TEST(SettlementEvaluator, AgreesWithSettle) {
  const auto g = four_aligned();
  const auto round = run_coordination(g);
  for (std::uint64_t mask = 0; mask < 16; ++mask) {
    const auto p = StrategyProfile::from_mask(4, mask);
    const SettlementEvaluator eval(g, round.decisions, p);
    const auto u = settled_utilities(g.instance, settle(g.instance, round.announcements, round.decisions, p, g.rewards),
                                     p, g.costs);
    for (std::size_t i = 0; i < 4; ++i) {
      EXPECT_EQ(eval.utility(i), u[i]);
      const auto q = p.flipped(i);
      const auto uq = settled_utilities(
          g.instance, settle(g.instance, round.announcements, round.decisions, q, g.rewards), q, g.costs);
      EXPECT_EQ(eval.utility_if(i, q[i]), uq[i]);
    }
  }
}

TEST(ReasonNames, Stable) {
  EXPECT_EQ(to_string(Verdict::AllDefect), "All-D");
  EXPECT_EQ(to_string(Verdict::Proceed), "Proceed");
  EXPECT_EQ(to_string(Reason::BelowTheta1), "BelowTheta1");
  EXPECT_EQ(to_string(Reason::NotSelected), "NotSelected");
}

}  // namespace
}  // namespace shardgame
