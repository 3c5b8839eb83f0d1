#pragma once

// Shard-based blockchain game: parameters, strategy profiles, consensus
// predicates and the uniform / fair payoff functions. Everything here is a
// pure function of its arguments.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace shardgame {

enum class Strategy : std::uint8_t { Cooperate, Defect };

constexpr Strategy flip(Strategy s) noexcept {
  return s == Strategy::Cooperate ? Strategy::Defect : Strategy::Cooperate;
}
constexpr char to_char(Strategy s) noexcept { return s == Strategy::Cooperate ? 'C' : 'D'; }

enum class Scheme : std::uint8_t { Uniform, Fair, IncentiveCompatible };

std::string_view to_string(Scheme s) noexcept;
/// Accepts "uniform", "fair", "ic" and "incentive_compatible".
std::optional<Scheme> parse_scheme(std::string_view text) noexcept;

/// Per-epoch processor costs: mandatory (c^m), fixed optional (c^f) and
/// per-transaction verification (c^v).
struct CostParams {
  double mandatory = 0.0;
  double fixed_optional = 0.0;
  double per_tx_verification = 0.0;

  void validate() const;
  bool operator==(const CostParams&) const = default;
};

/// Block reward BR and per-transaction fee term r.
struct RewardParams {
  double block_reward = 0.0;
  double per_tx_fee = 0.0;

  void validate() const;
  bool operator==(const RewardParams&) const = default;
};

/// Committee layout. Processors are numbered contiguously shard by shard:
/// shard j owns [first_processor(j), first_processor(j) + committee_size(j)).
class NetworkShape {
 public:
  NetworkShape() = default;
  NetworkShape(std::vector<std::size_t> committee_sizes, std::vector<std::size_t> thresholds);

  /// k equal committees of size n with a common threshold.
  static NetworkShape uniform(std::size_t shards, std::size_t committee, std::size_t tau);

  std::size_t num_processors() const noexcept { return offsets_.empty() ? 0 : offsets_.back(); }
  std::size_t num_shards() const noexcept { return sizes_.size(); }
  std::size_t committee_size(std::size_t shard) const { return sizes_.at(shard); }
  std::size_t threshold(std::size_t shard) const { return thresholds_.at(shard); }
  std::size_t first_processor(std::size_t shard) const { return offsets_.at(shard); }
  std::size_t shard_of(std::size_t processor) const;

  const std::vector<std::size_t>& committee_sizes() const noexcept { return sizes_; }
  const std::vector<std::size_t>& thresholds() const noexcept { return thresholds_; }

  bool operator==(const NetworkShape&) const = default;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> thresholds_;
  std::vector<std::size_t> offsets_;  // prefix sums, size k + 1
};

/// One epoch's network plus what each processor received. An aligned
/// processor's view equals its shard's consensus output, so its transaction
/// count equals the shard's consensus count.
class EpochInstance {
 public:
  EpochInstance() = default;
  EpochInstance(NetworkShape shape, std::vector<std::uint64_t> tx_count,
                std::vector<std::uint64_t> consensus_tx_count, std::vector<bool> aligned);

  const NetworkShape& shape() const noexcept { return shape_; }
  std::size_t num_processors() const noexcept { return shape_.num_processors(); }
  std::size_t num_shards() const noexcept { return shape_.num_shards(); }

  std::uint64_t tx_count(std::size_t processor) const { return tx_count_.at(processor); }
  std::uint64_t consensus_tx_count(std::size_t shard) const { return consensus_.at(shard); }
  bool aligned(std::size_t processor) const { return aligned_.at(processor); }

  const std::vector<std::uint64_t>& tx_counts() const noexcept { return tx_count_; }
  const std::vector<std::uint64_t>& consensus_tx_counts() const noexcept { return consensus_; }
  const std::vector<bool>& alignment() const noexcept { return aligned_; }

  bool operator==(const EpochInstance&) const = default;

 private:
  NetworkShape shape_;
  std::vector<std::uint64_t> tx_count_;
  std::vector<std::uint64_t> consensus_;
  std::vector<bool> aligned_;
};

/// Cooperate/Defect choice for every processor.
class StrategyProfile {
 public:
  StrategyProfile() = default;
  explicit StrategyProfile(std::vector<Strategy> strategies) : s_(std::move(strategies)) {}

  static StrategyProfile all(std::size_t n, Strategy s) { return StrategyProfile(std::vector<Strategy>(n, s)); }
  /// Bit i set means processor i cooperates. n <= 64.
  static StrategyProfile from_mask(std::size_t n, std::uint64_t mask);
  std::uint64_t mask() const;

  std::size_t size() const noexcept { return s_.size(); }
  Strategy operator[](std::size_t i) const { return s_[i]; }
  Strategy at(std::size_t i) const { return s_.at(i); }
  void set(std::size_t i, Strategy s) { s_.at(i) = s; }
  StrategyProfile flipped(std::size_t i) const;
  const std::vector<Strategy>& strategies() const noexcept { return s_; }

  /// L
  std::size_t cooperators() const noexcept;
  /// l_j
  std::size_t cooperators_in(const NetworkShape& shape, std::size_t shard) const;
  /// C_j^{l_j} and D_j^{n-l_j}, as processor indices.
  std::vector<std::size_t> cooperator_set(const NetworkShape& shape, std::size_t shard) const;
  std::vector<std::size_t> defector_set(const NetworkShape& shape, std::size_t shard) const;

  std::string to_string() const;

  bool operator==(const StrategyProfile&) const = default;

 private:
  std::vector<Strategy> s_;
};

/// A complete one-shot game: instance plus money parameters.
struct Game {
  EpochInstance instance;
  CostParams costs;
  RewardParams rewards;
};

struct EpochOutcome {
  StrategyProfile profile;
  std::vector<bool> shard_success;
  bool block_committed = false;
  std::vector<double> utility;
  double total_fees = 0.0;
  double cooperation_ratio = 0.0;
};

/// c^o = c^f + |x| c^v
double optional_cost(const CostParams& costs, std::uint64_t tx_count) noexcept;
/// c^t for a cooperator, c^m for a defector.
double total_cost(const CostParams& costs, std::uint64_t tx_count, Strategy strategy) noexcept;

/// TF = r * sum_j |y^j|
double total_fees(const EpochInstance& instance, const RewardParams& rewards) noexcept;

/// Each processor's equal share of BR + TF under uniform sharing.
double uniform_share(const EpochInstance& instance, const RewardParams& rewards) noexcept;
/// BR/(k l) + r|y|/l, a cooperator's benefit under fair sharing. l >= 1.
double fair_benefit(const RewardParams& rewards, std::size_t shards, std::size_t cooperators,
                    std::uint64_t consensus_tx) noexcept;

/// Aligned cooperators in the shard reach its consensus threshold.
bool shard_success(const EpochInstance& instance, const StrategyProfile& profile, std::size_t shard);
bool block_committed(const EpochInstance& instance, const StrategyProfile& profile);

double payoff_uniform(const EpochInstance& instance, const StrategyProfile& profile, const CostParams& costs,
                      const RewardParams& rewards, std::size_t processor);
double payoff_fair(const EpochInstance& instance, const StrategyProfile& profile, const CostParams& costs,
                   const RewardParams& rewards, std::size_t processor);
/// Dispatches on Uniform or Fair; IncentiveCompatible payoffs come from settlement.
double payoff(const Game& game, Scheme scheme, const StrategyProfile& profile, std::size_t processor);

EpochOutcome evaluate_epoch(const Game& game, Scheme scheme, const StrategyProfile& profile);

/// O(1) per query payoff lookups for one profile, including "what if processor
/// i played s instead". Results are bitwise identical to payoff_uniform /
/// payoff_fair.
class PayoffEvaluator {
 public:
  PayoffEvaluator(const Game& game, Scheme scheme, const StrategyProfile& profile);

  double utility(std::size_t processor) const;
  double utility_if(std::size_t processor, Strategy s) const;
  bool committed() const noexcept { return failing_shards_ == 0; }

 private:
  const Game* game_;
  Scheme scheme_;
  const StrategyProfile* profile_;
  double share_ = 0.0;
  std::vector<std::size_t> coop_;
  std::vector<std::size_t> aligned_coop_;
  std::size_t failing_shards_ = 0;
};

}  // namespace shardgame
