#include "shardgame/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "shardgame/errors.hpp"

namespace shardgame {

namespace {

// Divergent batches get ids in the upper half so they never collide with a
// shard's consensus batch id.
constexpr std::uint64_t kDivergentTag = std::uint64_t{1} << 63;

bool contains(const std::vector<std::size_t>& sorted, std::size_t value) {
  return std::binary_search(sorted.begin(), sorted.end(), value);
}

/// Cooperation pays for a majority-group member holding `tx` transactions.
bool member_should_cooperate(const Announcement& a, std::uint64_t tx) {
  const double x = static_cast<double>(tx);
  switch (a.theta1_denominator) {
    case Sign::Positive:
      return !(x <= a.theta1);
    case Sign::Negative:
      return !(x >= a.theta1);
    case Sign::Zero:
      return a.theta1 < 0.0;
  }
  return false;
}

}  // namespace

ViewDigest submit_view_digest(std::size_t processor, const TransactionView& view) {
  return ViewDigest{processor, sha256(encode_view(view))};
}

TransactionView canonical_view(const EpochInstance& instance, std::size_t processor) {
  const std::size_t shard = instance.shape().shard_of(processor);
  if (instance.aligned(processor)) return {instance.consensus_tx_count(shard), shard};
  return {instance.tx_count(processor), kDivergentTag | processor};
}

std::vector<Submission> collect_submissions(const EpochInstance& instance, std::size_t shard) {
  const auto& shape = instance.shape();
  const std::size_t first = shape.first_processor(shard);
  std::vector<Submission> out;
  out.reserve(shape.committee_size(shard));
  for (std::size_t i = first; i < first + shape.committee_size(shard); ++i) {
    out.push_back({submit_view_digest(i, canonical_view(instance, i)), instance.tx_count(i)});
  }
  return out;
}

std::string_view to_string(Verdict v) noexcept { return v == Verdict::Proceed ? "Proceed" : "All-D"; }

std::string_view to_string(Reason r) noexcept {
  switch (r) {
    case Reason::BelowTheta1:
      return "BelowTheta1";
    case Reason::AboveTheta2:
      return "AboveTheta2";
    case Reason::AllDefectVerdict:
      return "AllDefectVerdict";
    case Reason::InCooperativeSet:
      return "InCooperativeSet";
    case Reason::NotSelected:
      return "NotSelected";
  }
  return "?";
}

Announcement coordinate(std::size_t shard, std::span<const Submission> submissions, std::size_t tau,
                        std::size_t shards, const CostParams& costs, const RewardParams& rewards,
                        CoordinatorOptions options) {
  if (submissions.empty()) throw MalformedShardError("shard " + std::to_string(shard) + " submitted no digests");

  std::map<Digest, std::vector<std::size_t>> groups;  // indices into submissions
  for (std::size_t s = 0; s < submissions.size(); ++s) groups[submissions[s].view.digest].push_back(s);

  // std::map iterates in lexicographic digest order, so keeping the first
  // strictly larger group resolves ties toward the smallest digest.
  auto majority = groups.begin();
  for (auto it = groups.begin(); it != groups.end(); ++it) {
    if (it->second.size() > majority->second.size()) majority = it;
  }

  Announcement a;
  a.shard = shard;
  a.majority_digest = majority->first;
  for (auto s : majority->second) a.majority_group.push_back(submissions[s].view.processor);
  std::sort(a.majority_group.begin(), a.majority_group.end());
  a.consensus_tx_estimate = submissions[majority->second.front()].reported_tx;

  const std::size_t members = a.majority_group.size();
  const std::uint64_t y = a.consensus_tx_estimate;
  if (members < tau) {
    a.verdict = Verdict::AllDefect;
    a.l_j = members;
    const auto t = compute_thresholds(costs, rewards, shards, members, y);
    a.theta1 = t.theta1;
    a.theta1_denominator = t.theta1_denominator;
    a.theta2 = theta_c2_extended(costs, rewards, shards, members, y);
    return a;
  }

  std::size_t admitted = 0;
  std::vector<const Submission*> divergent;
  if (options.admit_divergent) {
    for (const auto& sub : submissions) {
      if (sub.view.digest != a.majority_digest) divergent.push_back(&sub);
    }
    std::sort(divergent.begin(), divergent.end(), [](const Submission* l, const Submission* r) {
      if (l->reported_tx != r->reported_tx) return l->reported_tx < r->reported_tx;
      return l->view.processor < r->view.processor;
    });
    // Both margins shrink as the group grows, so the feasible sizes form a prefix.
    while (admitted < divergent.size()) {
      const std::size_t l = members + admitted + 1;
      const bool members_gain = cooperation_margin(costs, rewards, shards, l, y, y) > 0.0;
      const bool newcomer_gains =
          cooperation_margin(costs, rewards, shards, l, y, divergent[admitted]->reported_tx) > 0.0;
      if (!members_gain || !newcomer_gains) break;
      ++admitted;
    }
  }

  a.verdict = Verdict::Proceed;
  a.cooperative_set = a.majority_group;
  for (std::size_t d = 0; d < admitted; ++d) a.cooperative_set.push_back(divergent[d]->view.processor);
  std::sort(a.cooperative_set.begin(), a.cooperative_set.end());
  a.l_j = a.cooperative_set.size();
  const auto t = compute_thresholds(costs, rewards, shards, a.l_j, y);
  a.theta1 = t.theta1;
  a.theta1_denominator = t.theta1_denominator;
  a.theta2 = theta_c2_extended(costs, rewards, shards, a.l_j, y);
  return a;
}

ParticipationDecision participate(std::size_t processor, const Announcement& announcement, std::uint64_t tx_count) {
  const auto& a = announcement;
  if (a.verdict == Verdict::AllDefect) return {processor, Strategy::Defect, Reason::AllDefectVerdict};
  if (contains(a.majority_group, processor)) {
    if (!member_should_cooperate(a, tx_count)) return {processor, Strategy::Defect, Reason::BelowTheta1};
    return {processor, Strategy::Cooperate, Reason::InCooperativeSet};
  }
  if (static_cast<double>(tx_count) >= a.theta2) return {processor, Strategy::Defect, Reason::AboveTheta2};
  if (contains(a.cooperative_set, processor)) return {processor, Strategy::Cooperate, Reason::InCooperativeSet};
  return {processor, Strategy::Defect, Reason::NotSelected};
}

std::vector<ParticipationDecision> recommend_epoch(const EpochInstance& instance,
                                                   std::span<const Announcement> announcements) {
  const auto& shape = instance.shape();
  if (announcements.size() != shape.num_shards()) throw ShapeError("need one announcement per shard");
  std::vector<ParticipationDecision> out;
  out.reserve(instance.num_processors());
  bool feasible = true;
  for (std::size_t j = 0; j < shape.num_shards(); ++j) {
    const auto& a = announcements[j];
    if (a.shard != j) throw ShapeError("announcements must be ordered by shard");
    std::size_t members_cooperating = 0;
    const std::size_t first = shape.first_processor(j);
    for (std::size_t i = first; i < first + shape.committee_size(j); ++i) {
      out.push_back(participate(i, a, instance.tx_count(i)));
      if (out.back().decision == Strategy::Cooperate && contains(a.majority_group, i)) ++members_cooperating;
    }
    feasible = feasible && members_cooperating >= shape.threshold(j);
  }
  if (!feasible) {
    for (auto& d : out) {
      if (d.decision == Strategy::Cooperate) d = {d.processor, Strategy::Defect, Reason::AllDefectVerdict};
    }
  }
  return out;
}

StrategyProfile recommended_profile(std::span<const ParticipationDecision> decisions) {
  std::vector<Strategy> s(decisions.size());
  for (std::size_t i = 0; i < decisions.size(); ++i) s[i] = decisions[i].decision;
  return StrategyProfile(std::move(s));
}

ProtocolRound run_coordination(const Game& game, CoordinatorOptions options) {
  const auto& inst = game.instance;
  const auto& shape = inst.shape();
  ProtocolRound round;
  round.announcements.reserve(shape.num_shards());
  for (std::size_t j = 0; j < shape.num_shards(); ++j) {
    const auto subs = collect_submissions(inst, j);
    round.announcements.push_back(
        coordinate(j, subs, shape.threshold(j), shape.num_shards(), game.costs, game.rewards, options));
  }
  round.decisions = recommend_epoch(inst, round.announcements);
  return round;
}

// --- settlement -------------------------------------------------------------

double RewardLedger::total() const noexcept { return std::accumulate(reward.begin(), reward.end(), 0.0); }

RewardLedger settle(const EpochInstance& instance, std::span<const Announcement> announcements,
                    std::span<const ParticipationDecision> decisions, const StrategyProfile& actual,
                    const RewardParams& rewards) {
  const auto& shape = instance.shape();
  const std::size_t n = instance.num_processors();
  if (decisions.size() != n || actual.size() != n) throw ShapeError("decisions and strategies must cover all processors");
  if (announcements.size() != shape.num_shards()) throw ShapeError("need one announcement per shard");

  RewardLedger ledger;
  ledger.reward.assign(n, 0.0);
  ledger.followed_recommendation.assign(n, false);
  ledger.block_committed = block_committed(instance, actual);

  std::vector<bool> compliant(n, false);
  std::vector<std::size_t> compliant_in_shard(shape.num_shards(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    ledger.followed_recommendation[i] = decisions[i].decision == actual[i];
    const std::size_t j = shape.shard_of(i);
    if (decisions[i].decision == Strategy::Cooperate && actual[i] == Strategy::Cooperate &&
        contains(announcements[j].cooperative_set, i)) {
      compliant[i] = true;
      ++compliant_in_shard[j];
    }
  }
  if (!ledger.block_committed) return ledger;
  for (std::size_t i = 0; i < n; ++i) {
    if (!compliant[i]) continue;
    const std::size_t j = shape.shard_of(i);
    ledger.reward[i] = fair_benefit(rewards, shape.num_shards(), compliant_in_shard[j], instance.consensus_tx_count(j));
  }
  return ledger;
}

std::vector<double> settled_utilities(const EpochInstance& instance, const RewardLedger& ledger,
                                      const StrategyProfile& actual, const CostParams& costs) {
  std::vector<double> out(instance.num_processors());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = ledger.reward.at(i) - total_cost(costs, instance.tx_count(i), actual[i]);
  }
  return out;
}

// --- SettlementEvaluator ----------------------------------------------------

SettlementEvaluator::SettlementEvaluator(const Game& game, std::span<const ParticipationDecision> decisions,
                                         const StrategyProfile& profile)
    : game_(&game), decisions_(decisions), profile_(&profile) {
  const auto& inst = game.instance;
  const auto& shape = inst.shape();
  if (decisions.size() != inst.num_processors() || profile.size() != inst.num_processors()) {
    throw ShapeError("decisions and strategies must cover all processors");
  }
  aligned_coop_.assign(shape.num_shards(), 0);
  compliant_.assign(shape.num_shards(), 0);
  for (std::size_t j = 0; j < shape.num_shards(); ++j) {
    const std::size_t first = shape.first_processor(j);
    for (std::size_t i = first; i < first + shape.committee_size(j); ++i) {
      if (profile[i] != Strategy::Cooperate) continue;
      if (inst.aligned(i)) ++aligned_coop_[j];
      if (decisions[i].decision == Strategy::Cooperate) ++compliant_[j];
    }
    if (aligned_coop_[j] < shape.threshold(j)) ++failing_shards_;
  }
}

double SettlementEvaluator::utility(std::size_t processor) const {
  return utility_if(processor, (*profile_)[processor]);
}

double SettlementEvaluator::utility_if(std::size_t processor, Strategy s) const {
  const auto& inst = game_->instance;
  const auto& shape = inst.shape();
  const std::size_t j = shape.shard_of(processor);
  const bool recommended = decisions_[processor].decision == Strategy::Cooperate;

  std::size_t a = aligned_coop_[j];
  std::size_t c = compliant_[j];
  if ((*profile_)[processor] != s) {
    const bool joins = s == Strategy::Cooperate;
    if (inst.aligned(processor)) a = joins ? a + 1 : a - 1;
    if (recommended) c = joins ? c + 1 : c - 1;
  }
  const bool was_failing = aligned_coop_[j] < shape.threshold(j);
  const bool fails = a < shape.threshold(j);
  const std::size_t failing = failing_shards_ - (was_failing ? 1 : 0) + (fails ? 1 : 0);

  const double cost = total_cost(game_->costs, inst.tx_count(processor), s);
  if (failing != 0 || !recommended || s != Strategy::Cooperate) return -cost;
  return fair_benefit(game_->rewards, shape.num_shards(), c, inst.consensus_tx_count(j)) - cost;
}

}  // namespace shardgame
