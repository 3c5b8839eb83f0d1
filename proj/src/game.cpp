#include "shardgame/game.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "shardgame/errors.hpp"

namespace shardgame {

namespace {

void require_money(double v, const char* name) {
  if (!std::isfinite(v) || v < 0.0) {
    throw std::invalid_argument(std::string(name) + " must be a finite non-negative amount");
  }
}

}  // namespace

std::string_view to_string(Scheme s) noexcept {
  switch (s) {
    case Scheme::Uniform:
      return "uniform";
    case Scheme::Fair:
      return "fair";
    case Scheme::IncentiveCompatible:
      return "ic";
  }
  return "?";
}

std::optional<Scheme> parse_scheme(std::string_view text) noexcept {
  if (text == "uniform") return Scheme::Uniform;
  if (text == "fair") return Scheme::Fair;
  if (text == "ic" || text == "incentive_compatible") return Scheme::IncentiveCompatible;
  return std::nullopt;
}

void CostParams::validate() const {
  require_money(mandatory, "mandatory cost");
  require_money(fixed_optional, "fixed optional cost");
  require_money(per_tx_verification, "per-transaction verification cost");
}

void RewardParams::validate() const {
  require_money(block_reward, "block reward");
  require_money(per_tx_fee, "per-transaction fee");
}

// --- NetworkShape -----------------------------------------------------------

NetworkShape::NetworkShape(std::vector<std::size_t> committee_sizes, std::vector<std::size_t> thresholds)
    : sizes_(std::move(committee_sizes)), thresholds_(std::move(thresholds)) {
  if (sizes_.empty()) throw ShapeError("network needs at least one shard");
  if (thresholds_.size() != sizes_.size()) throw ShapeError("one consensus threshold per shard is required");
  offsets_.reserve(sizes_.size() + 1);
  offsets_.push_back(0);
  for (std::size_t j = 0; j < sizes_.size(); ++j) {
    if (sizes_[j] == 0) throw ShapeError("shard " + std::to_string(j) + " has an empty committee");
    if (thresholds_[j] < 1 || thresholds_[j] > sizes_[j]) {
      throw ShapeError("shard " + std::to_string(j) + ": threshold " + std::to_string(thresholds_[j]) +
                       " outside [1, " + std::to_string(sizes_[j]) + "]");
    }
    offsets_.push_back(offsets_.back() + sizes_[j]);
  }
}

NetworkShape NetworkShape::uniform(std::size_t shards, std::size_t committee, std::size_t tau) {
  return NetworkShape(std::vector<std::size_t>(shards, committee), std::vector<std::size_t>(shards, tau));
}

std::size_t NetworkShape::shard_of(std::size_t processor) const {
  if (processor >= num_processors()) throw ShapeError("processor index out of range");
  auto it = std::upper_bound(offsets_.begin(), offsets_.end(), processor);
  return static_cast<std::size_t>(it - offsets_.begin()) - 1;
}

// --- EpochInstance ----------------------------------------------------------

EpochInstance::EpochInstance(NetworkShape shape, std::vector<std::uint64_t> tx_count,
                             std::vector<std::uint64_t> consensus_tx_count, std::vector<bool> aligned)
    : shape_(std::move(shape)),
      tx_count_(std::move(tx_count)),
      consensus_(std::move(consensus_tx_count)),
      aligned_(std::move(aligned)) {
  const std::size_t n = shape_.num_processors();
  if (n == 0) throw ShapeError("instance has no processors");
  if (tx_count_.size() != n) throw ShapeError("need one transaction count per processor");
  if (aligned_.size() != n) throw ShapeError("need one alignment flag per processor");
  if (consensus_.size() != shape_.num_shards()) throw ShapeError("need one consensus count per shard");
  for (std::size_t i = 0; i < n; ++i) {
    if (aligned_[i] && tx_count_[i] != consensus_[shape_.shard_of(i)]) {
      throw ShapeError("aligned processor " + std::to_string(i) +
                       " must hold exactly its shard's consensus transactions");
    }
  }
}

// --- StrategyProfile --------------------------------------------------------

StrategyProfile StrategyProfile::from_mask(std::size_t n, std::uint64_t mask) {
  if (n > 64) throw SizeGuardError("bitmask profiles hold at most 64 processors");
  std::vector<Strategy> s(n, Strategy::Defect);
  for (std::size_t i = 0; i < n; ++i) {
    if (mask >> i & 1U) s[i] = Strategy::Cooperate;
  }
  return StrategyProfile(std::move(s));
}

std::uint64_t StrategyProfile::mask() const {
  if (s_.size() > 64) throw SizeGuardError("bitmask profiles hold at most 64 processors");
  std::uint64_t m = 0;
  for (std::size_t i = 0; i < s_.size(); ++i) {
    if (s_[i] == Strategy::Cooperate) m |= std::uint64_t{1} << i;
  }
  return m;
}

StrategyProfile StrategyProfile::flipped(std::size_t i) const {
  StrategyProfile out = *this;
  out.set(i, flip(s_.at(i)));
  return out;
}

std::size_t StrategyProfile::cooperators() const noexcept {
  return static_cast<std::size_t>(std::count(s_.begin(), s_.end(), Strategy::Cooperate));
}

std::size_t StrategyProfile::cooperators_in(const NetworkShape& shape, std::size_t shard) const {
  const std::size_t first = shape.first_processor(shard);
  const auto begin = s_.begin() + static_cast<std::ptrdiff_t>(first);
  return static_cast<std::size_t>(
      std::count(begin, begin + static_cast<std::ptrdiff_t>(shape.committee_size(shard)), Strategy::Cooperate));
}

std::vector<std::size_t> StrategyProfile::cooperator_set(const NetworkShape& shape, std::size_t shard) const {
  std::vector<std::size_t> out;
  const std::size_t first = shape.first_processor(shard);
  for (std::size_t i = first; i < first + shape.committee_size(shard); ++i) {
    if (s_.at(i) == Strategy::Cooperate) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> StrategyProfile::defector_set(const NetworkShape& shape, std::size_t shard) const {
  std::vector<std::size_t> out;
  const std::size_t first = shape.first_processor(shard);
  for (std::size_t i = first; i < first + shape.committee_size(shard); ++i) {
    if (s_.at(i) == Strategy::Defect) out.push_back(i);
  }
  return out;
}

std::string StrategyProfile::to_string() const {
  std::string out;
  out.reserve(s_.size());
  for (auto s : s_) out.push_back(to_char(s));
  return out;
}

// --- costs and payoffs ------------------------------------------------------

double optional_cost(const CostParams& costs, std::uint64_t tx_count) noexcept {
  return costs.fixed_optional + static_cast<double>(tx_count) * costs.per_tx_verification;
}

double total_cost(const CostParams& costs, std::uint64_t tx_count, Strategy strategy) noexcept {
  if (strategy == Strategy::Defect) return costs.mandatory;
  return costs.mandatory + optional_cost(costs, tx_count);
}

double total_fees(const EpochInstance& instance, const RewardParams& rewards) noexcept {
  std::uint64_t txs = 0;
  for (auto y : instance.consensus_tx_counts()) txs += y;
  return rewards.per_tx_fee * static_cast<double>(txs);
}

double uniform_share(const EpochInstance& instance, const RewardParams& rewards) noexcept {
  return (rewards.block_reward + total_fees(instance, rewards)) / static_cast<double>(instance.num_processors());
}

double fair_benefit(const RewardParams& rewards, std::size_t shards, std::size_t cooperators,
                    std::uint64_t consensus_tx) noexcept {
  const double l = static_cast<double>(cooperators);
  return rewards.block_reward / (static_cast<double>(shards) * l) +
         rewards.per_tx_fee * static_cast<double>(consensus_tx) / l;
}

namespace {

std::size_t aligned_cooperators(const EpochInstance& instance, const StrategyProfile& profile, std::size_t shard) {
  const auto& shape = instance.shape();
  const std::size_t first = shape.first_processor(shard);
  std::size_t count = 0;
  for (std::size_t i = first; i < first + shape.committee_size(shard); ++i) {
    if (profile.at(i) == Strategy::Cooperate && instance.aligned(i)) ++count;
  }
  return count;
}

void require_processor(const EpochInstance& instance, const StrategyProfile& profile, std::size_t processor) {
  if (profile.size() != instance.num_processors()) throw ShapeError("profile size does not match instance");
  if (processor >= instance.num_processors()) throw ShapeError("processor index out of range");
}

}  // namespace

bool shard_success(const EpochInstance& instance, const StrategyProfile& profile, std::size_t shard) {
  if (shard >= instance.num_shards()) throw ShapeError("shard index out of range");
  return aligned_cooperators(instance, profile, shard) >= instance.shape().threshold(shard);
}

bool block_committed(const EpochInstance& instance, const StrategyProfile& profile) {
  for (std::size_t j = 0; j < instance.num_shards(); ++j) {
    if (!shard_success(instance, profile, j)) return false;
  }
  return true;
}

double payoff_uniform(const EpochInstance& instance, const StrategyProfile& profile, const CostParams& costs,
                      const RewardParams& rewards, std::size_t processor) {
  require_processor(instance, profile, processor);
  const double cost = total_cost(costs, instance.tx_count(processor), profile[processor]);
  if (!block_committed(instance, profile)) return -cost;
  return uniform_share(instance, rewards) - cost;
}

double payoff_fair(const EpochInstance& instance, const StrategyProfile& profile, const CostParams& costs,
                   const RewardParams& rewards, std::size_t processor) {
  require_processor(instance, profile, processor);
  const Strategy s = profile[processor];
  const double cost = total_cost(costs, instance.tx_count(processor), s);
  if (s == Strategy::Defect || !block_committed(instance, profile)) return -cost;
  // A committed block means every shard has at least tau >= 1 cooperators.
  const std::size_t shard = instance.shape().shard_of(processor);
  const std::size_t l = profile.cooperators_in(instance.shape(), shard);
  return fair_benefit(rewards, instance.num_shards(), l, instance.consensus_tx_count(shard)) - cost;
}

double payoff(const Game& game, Scheme scheme, const StrategyProfile& profile, std::size_t processor) {
  switch (scheme) {
    case Scheme::Uniform:
      return payoff_uniform(game.instance, profile, game.costs, game.rewards, processor);
    case Scheme::Fair:
      return payoff_fair(game.instance, profile, game.costs, game.rewards, processor);
    case Scheme::IncentiveCompatible:
      break;
  }
  throw std::invalid_argument("incentive-compatible payoffs are produced by protocol settlement");
}

EpochOutcome evaluate_epoch(const Game& game, Scheme scheme, const StrategyProfile& profile) {
  const auto& inst = game.instance;
  PayoffEvaluator eval(game, scheme, profile);
  EpochOutcome out;
  out.profile = profile;
  out.shard_success.resize(inst.num_shards());
  for (std::size_t j = 0; j < inst.num_shards(); ++j) out.shard_success[j] = shard_success(inst, profile, j);
  out.block_committed = eval.committed();
  out.utility.resize(inst.num_processors());
  for (std::size_t i = 0; i < inst.num_processors(); ++i) out.utility[i] = eval.utility(i);
  out.total_fees = total_fees(inst, game.rewards);
  out.cooperation_ratio =
      static_cast<double>(profile.cooperators()) / static_cast<double>(inst.num_processors());
  return out;
}

// --- PayoffEvaluator --------------------------------------------------------

PayoffEvaluator::PayoffEvaluator(const Game& game, Scheme scheme, const StrategyProfile& profile)
    : game_(&game), scheme_(scheme), profile_(&profile) {
  if (scheme == Scheme::IncentiveCompatible) {
    throw std::invalid_argument("PayoffEvaluator covers the uniform and fair schemes only");
  }
  const auto& inst = game.instance;
  const auto& shape = inst.shape();
  if (profile.size() != inst.num_processors()) throw ShapeError("profile size does not match instance");
  share_ = uniform_share(inst, game.rewards);
  coop_.assign(shape.num_shards(), 0);
  aligned_coop_.assign(shape.num_shards(), 0);
  for (std::size_t j = 0; j < shape.num_shards(); ++j) {
    const std::size_t first = shape.first_processor(j);
    for (std::size_t i = first; i < first + shape.committee_size(j); ++i) {
      if (profile[i] != Strategy::Cooperate) continue;
      ++coop_[j];
      if (inst.aligned(i)) ++aligned_coop_[j];
    }
    if (aligned_coop_[j] < shape.threshold(j)) ++failing_shards_;
  }
}

double PayoffEvaluator::utility(std::size_t processor) const {
  return utility_if(processor, (*profile_)[processor]);
}

double PayoffEvaluator::utility_if(std::size_t processor, Strategy s) const {
  const auto& inst = game_->instance;
  const auto& shape = inst.shape();
  const std::size_t j = shape.shard_of(processor);
  const Strategy current = (*profile_)[processor];

  std::size_t l = coop_[j];
  std::size_t a = aligned_coop_[j];
  if (current != s) {
    const bool joins = s == Strategy::Cooperate;
    l = joins ? l + 1 : l - 1;
    if (inst.aligned(processor)) a = joins ? a + 1 : a - 1;
  }
  const bool was_failing = aligned_coop_[j] < shape.threshold(j);
  const bool fails = a < shape.threshold(j);
  const std::size_t failing = failing_shards_ - (was_failing ? 1 : 0) + (fails ? 1 : 0);

  const double cost = total_cost(game_->costs, inst.tx_count(processor), s);
  if (failing != 0) return -cost;
  if (scheme_ == Scheme::Uniform) return share_ - cost;
  if (s == Strategy::Defect) return -cost;
  return fair_benefit(game_->rewards, shape.num_shards(), l, inst.consensus_tx_count(j)) - cost;
}

}  // namespace shardgame
