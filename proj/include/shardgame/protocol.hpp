#pragma once

// Incentive-compatible coordination protocol: processors submit view
// digests, a per-shard coordinator estimates the cooperative set and the
// cooperation thresholds, processors decide, and settlement pays compliant
// cooperators while withholding rewards from those who ignored a Cooperate
// recommendation.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "shardgame/digest.hpp"
#include "shardgame/equilibrium.hpp"
#include "shardgame/game.hpp"

namespace shardgame {

struct ViewDigest {
  std::size_t processor = 0;
  Digest digest{};
};

/// A digest plus the transaction count the processor reports with it. The
/// coordinator uses the majority group's count as its |y^j| estimate.
struct Submission {
  ViewDigest view;
  std::uint64_t reported_tx = 0;
};

ViewDigest submit_view_digest(std::size_t processor, const TransactionView& view);

/// The view the simulator assigns a processor: aligned processors share their
/// shard's consensus batch, divergent processors each hold a distinct batch.
TransactionView canonical_view(const EpochInstance& instance, std::size_t processor);

std::vector<Submission> collect_submissions(const EpochInstance& instance, std::size_t shard);

enum class Verdict : std::uint8_t { AllDefect, Proceed };

std::string_view to_string(Verdict v) noexcept;

struct Announcement {
  std::size_t shard = 0;
  Verdict verdict = Verdict::AllDefect;
  /// Processors sharing the most common digest (sorted).
  std::vector<std::size_t> majority_group;
  /// C_j^{l_j} (sorted): the majority group plus any admitted divergent
  /// processors. Empty under AllDefect.
  std::vector<std::size_t> cooperative_set;
  /// Cooperative set size under Proceed; largest group size under AllDefect.
  std::size_t l_j = 0;
  std::uint64_t consensus_tx_estimate = 0;
  double theta1 = 0.0;
  /// theta_c2 on the extended reals (see theta_c2_extended).
  double theta2 = 0.0;
  Sign theta1_denominator = Sign::Positive;
  Digest majority_digest{};
};

struct CoordinatorOptions {
  /// Also recruit divergent processors whose cooperation stays profitable
  /// (|x| < theta_c2) once they are counted in l_j. Off: only the majority
  /// group is ever asked to cooperate.
  bool admit_divergent = false;
};

/// Groups the shard's digests, takes the largest group (ties: smallest
/// digest) and announces AllDefect when it is smaller than tau. Throws
/// MalformedShardError on an empty submission list.
Announcement coordinate(std::size_t shard, std::span<const Submission> submissions, std::size_t tau,
                        std::size_t shards, const CostParams& costs, const RewardParams& rewards,
                        CoordinatorOptions options = {});

enum class Reason : std::uint8_t { BelowTheta1, AboveTheta2, AllDefectVerdict, InCooperativeSet, NotSelected };

std::string_view to_string(Reason r) noexcept;

struct ParticipationDecision {
  std::size_t processor = 0;
  Strategy decision = Strategy::Defect;
  Reason reason = Reason::NotSelected;
};

/// One processor's reading of its shard's announcement. Majority-group
/// members defect when their count sits on the unprofitable side of theta1
/// ("<= theta1" for a positive denominator, ">= theta1" for a negative one).
/// Others defect at "|x| >= theta2" and otherwise unless admitted.
ParticipationDecision participate(std::size_t processor, const Announcement& announcement, std::uint64_t tx_count);

/// participate() for every processor. Announcements are public, so when some
/// shard cannot reach tau recommended cooperators no block can form and every
/// Cooperate recommendation becomes Defect(AllDefectVerdict).
std::vector<ParticipationDecision> recommend_epoch(const EpochInstance& instance,
                                                   std::span<const Announcement> announcements);

StrategyProfile recommended_profile(std::span<const ParticipationDecision> decisions);

struct ProtocolRound {
  std::vector<Announcement> announcements;
  std::vector<ParticipationDecision> decisions;
};

/// Digest submission, coordination and participation for every shard.
ProtocolRound run_coordination(const Game& game, CoordinatorOptions options = {});

struct RewardLedger {
  std::vector<double> reward;
  std::vector<bool> followed_recommendation;
  bool block_committed = false;

  double total() const noexcept;
};

/// Shard and block success come from the actual strategies. Compliant
/// cooperators (recommended Cooperate, in the cooperative set, did cooperate)
/// in a committed block split BR/k and r|y^j| of their shard evenly; everyone
/// else gets nothing.
RewardLedger settle(const EpochInstance& instance, std::span<const Announcement> announcements,
                    std::span<const ParticipationDecision> decisions, const StrategyProfile& actual,
                    const RewardParams& rewards);

/// reward - total_cost(actual strategy) per processor.
std::vector<double> settled_utilities(const EpochInstance& instance, const RewardLedger& ledger,
                                      const StrategyProfile& actual, const CostParams& costs);

/// O(1) per query settled utility for one profile, with recommendations fixed.
class SettlementEvaluator {
 public:
  SettlementEvaluator(const Game& game, std::span<const ParticipationDecision> decisions,
                      const StrategyProfile& profile);

  double utility(std::size_t processor) const;
  double utility_if(std::size_t processor, Strategy s) const;

 private:
  const Game* game_;
  std::span<const ParticipationDecision> decisions_;
  const StrategyProfile* profile_;
  std::vector<std::size_t> aligned_coop_;
  std::vector<std::size_t> compliant_;
  std::size_t failing_shards_ = 0;
};

}  // namespace shardgame
