#pragma once

// Monte Carlo harness: randomized epochs in the style of the reference
// experiments (committees of ~100, simple-majority threshold, ~15% divergent
// views, +/-1% jitter), strategy dynamics per reward scheme, and parameter
// sweeps averaged over independent epochs.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shardgame/game.hpp"
#include "shardgame/protocol.hpp"

namespace shardgame {

enum class Dynamics : std::uint8_t { ThresholdRule, BestResponse };

std::string_view to_string(Dynamics d) noexcept;

/// How each committee's consensus threshold is derived from its size.
struct TauRule {
  enum class Kind : std::uint8_t { Majority, Fraction, Absolute };
  Kind kind = Kind::Majority;
  double fraction = 0.5;
  std::size_t absolute = 0;

  static TauRule majority() { return {}; }
  static TauRule of_fraction(double f) { return {Kind::Fraction, f, 0}; }
  static TauRule of_absolute(std::size_t t) { return {Kind::Absolute, 0.0, t}; }

  /// Throws ShapeError when the committee is smaller than the threshold.
  std::size_t apply(std::size_t committee) const;
  std::string to_string() const;

  bool operator==(const TauRule&) const = default;
};

struct SimConfig {
  std::size_t target_n = 1000;
  std::size_t committee_size = 100;
  TauRule tau;
  std::uint64_t avg_tx = 1000;
  double divergence_rate = 0.15;
  CostParams costs{10.0, 0.0, 0.0};
  RewardParams rewards;
  Scheme scheme = Scheme::Fair;
  Dynamics dynamics = Dynamics::ThresholdRule;
  std::size_t iterations = 100;
  std::uint64_t seed = 1;
  /// Coordinator also recruits divergent processors (incentive-compatible scheme).
  bool admit_divergent = false;

  void validate() const;
  bool operator==(const SimConfig&) const = default;
};

enum class SweepVariable : std::uint8_t { AvgTx, BlockReward, NumProcessors };

std::string_view to_string(SweepVariable v) noexcept;
std::optional<SweepVariable> parse_sweep_variable(std::string_view text) noexcept;

struct SweepSpec {
  SweepVariable varying = SweepVariable::AvgTx;
  std::vector<double> values;
  SimConfig base;

  /// Non-empty, strictly increasing values on top of a valid base config.
  void validate() const;
};

struct AggregateResult {
  double sweep_point = 0.0;
  double mean_cooperation_ratio = 0.0;
  double mean_defection_ratio = 0.0;
  /// Pooled over every cooperator of every epoch; 0 when there were none.
  double mean_utility_cooperators = 0.0;
  double mean_utility_defectors = 0.0;
  double weighted_mean_utility = 0.0;
  double block_commit_rate = 0.0;
  std::size_t iterations = 0;
  /// Epochs whose best-response dynamics hit the round cap.
  std::size_t nonconverged_epochs = 0;
  bool failed = false;
  std::string error;
};

struct StrategyDecision {
  StrategyProfile profile;
  /// Present for the incentive-compatible scheme.
  std::vector<Announcement> announcements;
  std::vector<ParticipationDecision> recommendations;
  bool converged = true;
  std::size_t rounds = 0;
};

struct EpochRun {
  EpochOutcome outcome;
  bool converged = true;
};

inline constexpr std::size_t kMaxBestResponseRounds = 1000;

/// splitmix64-based derivation, so any (point, iteration) can be re-run alone.
std::uint64_t epoch_seed(std::uint64_t master, std::uint64_t sweep_index, std::uint64_t iteration) noexcept;

EpochInstance generate_epoch(const SimConfig& config, std::uint64_t seed);

/// Largest self-sustaining cooperative group per shard under fair sharing,
/// starting from each shard's aligned count; All-Defect when any shard cannot
/// reach consensus.
StrategyProfile fair_threshold_profile(const Game& game);

StrategyDecision decide_strategies(const EpochInstance& instance, const SimConfig& config);

EpochRun run_epoch(const EpochInstance& instance, const SimConfig& config);

SimConfig apply_sweep_point(const SweepSpec& spec, double value);

/// Runs every point of the sweep. Results are identical for any worker count;
/// 0 picks the hardware concurrency.
std::vector<AggregateResult> run_sweep(const SweepSpec& spec, std::size_t workers = 0);

}  // namespace shardgame
