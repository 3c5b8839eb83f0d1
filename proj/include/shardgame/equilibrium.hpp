#pragma once

// Cooperation thresholds, unilateral-deviation analysis and Nash equilibrium
// verification / enumeration for the shard game.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "shardgame/game.hpp"

namespace shardgame {

enum class Sign : std::int8_t { Negative = -1, Zero = 0, Positive = 1 };

struct Thresholds {
  /// theta_c1, possibly +/-infinity when its denominator vanishes.
  double theta1 = 0.0;
  /// theta_c2; empty when c^v == 0.
  std::optional<double> theta2;
  /// Sign of r/l_j - c^v. When negative, cooperation pays for |x| *below* theta1.
  Sign theta1_denominator = Sign::Positive;
};

/// (c^f - BR/(k l)) / (r/l - c^v). A zero denominator yields +inf for a
/// positive numerator and -inf otherwise.
double theta_c1(const CostParams& costs, const RewardParams& rewards, std::size_t shards, std::size_t cooperators);
Sign theta_c1_denominator_sign(const CostParams& costs, const RewardParams& rewards, std::size_t cooperators);

/// (BR/(k l) + r|y|/l - c^f) / c^v. Throws UndefinedThresholdError when c^v == 0.
double theta_c2(const CostParams& costs, const RewardParams& rewards, std::size_t shards, std::size_t cooperators,
                std::uint64_t consensus_tx);

/// theta2 with c^v == 0 mapped onto the extended reals: +inf when divergent
/// cooperation pays for every |x| (numerator >= 0), -inf when it never does.
double theta_c2_extended(const CostParams& costs, const RewardParams& rewards, std::size_t shards,
                         std::size_t cooperators, std::uint64_t consensus_tx);

Thresholds compute_thresholds(const CostParams& costs, const RewardParams& rewards, std::size_t shards,
                              std::size_t cooperators, std::uint64_t consensus_tx);

/// Fair-scheme gain of cooperating over defecting in a committed block:
/// BR/(k l) + r*rewarded_tx/l - c^f - own_tx*c^v. The threshold inequalities
/// are sign tests on this quantity.
double cooperation_margin(const CostParams& costs, const RewardParams& rewards, std::size_t shards,
                          std::size_t cooperators, std::uint64_t rewarded_tx, std::uint64_t own_tx) noexcept;

struct DeviationReport {
  std::size_t processor = 0;
  Strategy current_strategy = Strategy::Defect;
  double current_utility = 0.0;
  double deviation_utility = 0.0;
  /// Strict improvement only; ties keep the current strategy.
  bool profitable = false;

  double gain() const noexcept { return deviation_utility - current_utility; }
};

struct NashCertificate {
  StrategyProfile profile;
  bool is_nash = false;
  /// Every profitable deviation found; empty iff is_nash.
  std::vector<DeviationReport> witnesses;
};

/// Utility of `processor` when the whole network plays `profile`.
using UtilityFunction = std::function<double(const StrategyProfile& profile, std::size_t processor)>;

DeviationReport unilateral_deviation(const Game& game, const StrategyProfile& profile, std::size_t processor,
                                     Scheme scheme);
DeviationReport unilateral_deviation(const StrategyProfile& profile, std::size_t processor,
                                     const UtilityFunction& utility);

NashCertificate is_nash(const Game& game, const StrategyProfile& profile, Scheme scheme);
NashCertificate is_nash(const StrategyProfile& profile, const UtilityFunction& utility);

inline constexpr std::size_t kMaxEnumerationProcessors = 20;

/// Every pure Nash equilibrium, ordered by profile bitmask (All-Defect first).
/// Throws SizeGuardError above kMaxEnumerationProcessors processors.
std::vector<NashCertificate> enumerate_nash(const Game& game, Scheme scheme);

/// Fair-scheme cooperative equilibrium conditions, evaluated in inequality
/// form so every sign of r/l - c^v is handled.
struct CooperativeConditions {
  /// Per processor: cooperators satisfy their profitability condition,
  /// defectors would not gain by joining (evaluated at l_j + 1).
  std::vector<bool> processor_ok;
  /// Aligned cooperators reach tau in every shard.
  bool consensus_reached = false;
  /// Every aligned cooperator: BR/(k l) + r|x|/l - c^f - |x|c^v >= 0.
  bool aligned_profitable = false;
  /// Every divergent cooperator: |x| < theta_c2.
  bool divergent_profitable = false;
  /// l_j is the largest self-sustaining group: no defector gains by joining.
  bool maximal = false;

  bool stated_conditions() const noexcept { return consensus_reached && aligned_profitable && divergent_profitable; }
  bool holds() const noexcept { return stated_conditions() && maximal; }
};

CooperativeConditions check_cooperative_conditions(const Game& game, const StrategyProfile& profile);

}  // namespace shardgame
