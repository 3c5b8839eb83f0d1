#include "shardgame/equilibrium.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "shardgame/errors.hpp"

namespace shardgame {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_group(std::size_t shards, std::size_t cooperators) {
  if (shards < 1) throw std::invalid_argument("threshold needs k >= 1");
  if (cooperators < 1) throw std::invalid_argument("threshold needs l_j >= 1");
}

double theta1_denominator(const CostParams& costs, const RewardParams& rewards, std::size_t cooperators) {
  return rewards.per_tx_fee / static_cast<double>(cooperators) - costs.per_tx_verification;
}

double theta2_numerator(const CostParams& costs, const RewardParams& rewards, std::size_t shards,
                        std::size_t cooperators, std::uint64_t consensus_tx) {
  return fair_benefit(rewards, shards, cooperators, consensus_tx) - costs.fixed_optional;
}

}  // namespace

double theta_c1(const CostParams& costs, const RewardParams& rewards, std::size_t shards, std::size_t cooperators) {
  require_group(shards, cooperators);
  const double numerator =
      costs.fixed_optional - rewards.block_reward / (static_cast<double>(shards) * static_cast<double>(cooperators));
  const double denominator = theta1_denominator(costs, rewards, cooperators);
  if (denominator == 0.0) return numerator > 0.0 ? kInf : -kInf;
  return numerator / denominator;
}

Sign theta_c1_denominator_sign(const CostParams& costs, const RewardParams& rewards, std::size_t cooperators) {
  if (cooperators < 1) throw std::invalid_argument("threshold needs l_j >= 1");
  const double d = theta1_denominator(costs, rewards, cooperators);
  if (d > 0.0) return Sign::Positive;
  if (d < 0.0) return Sign::Negative;
  return Sign::Zero;
}

double theta_c2(const CostParams& costs, const RewardParams& rewards, std::size_t shards, std::size_t cooperators,
                std::uint64_t consensus_tx) {
  require_group(shards, cooperators);
  if (costs.per_tx_verification == 0.0) {
    throw UndefinedThresholdError("theta_c2 is undefined when verification is free (c^v = 0)");
  }
  return theta2_numerator(costs, rewards, shards, cooperators, consensus_tx) / costs.per_tx_verification;
}

double theta_c2_extended(const CostParams& costs, const RewardParams& rewards, std::size_t shards,
                         std::size_t cooperators, std::uint64_t consensus_tx) {
  require_group(shards, cooperators);
  if (costs.per_tx_verification == 0.0) {
    return theta2_numerator(costs, rewards, shards, cooperators, consensus_tx) >= 0.0 ? kInf : -kInf;
  }
  return theta_c2(costs, rewards, shards, cooperators, consensus_tx);
}

Thresholds compute_thresholds(const CostParams& costs, const RewardParams& rewards, std::size_t shards,
                              std::size_t cooperators, std::uint64_t consensus_tx) {
  Thresholds t;
  t.theta1 = theta_c1(costs, rewards, shards, cooperators);
  t.theta1_denominator = theta_c1_denominator_sign(costs, rewards, cooperators);
  if (costs.per_tx_verification != 0.0) t.theta2 = theta_c2(costs, rewards, shards, cooperators, consensus_tx);
  return t;
}

double cooperation_margin(const CostParams& costs, const RewardParams& rewards, std::size_t shards,
                          std::size_t cooperators, std::uint64_t rewarded_tx, std::uint64_t own_tx) noexcept {
  return fair_benefit(rewards, shards, cooperators, rewarded_tx) - optional_cost(costs, own_tx);
}

// --- deviations -------------------------------------------------------------

namespace {

DeviationReport make_report(std::size_t processor, Strategy current, double now, double then) {
  return DeviationReport{processor, current, now, then, then > now};
}

void require_scheme(Scheme scheme) {
  if (scheme == Scheme::IncentiveCompatible) {
    throw std::invalid_argument("use the utility-function overload for settled (incentive-compatible) payoffs");
  }
}

}  // namespace

DeviationReport unilateral_deviation(const Game& game, const StrategyProfile& profile, std::size_t processor,
                                     Scheme scheme) {
  require_scheme(scheme);
  if (processor >= profile.size()) throw ShapeError("processor index out of range");
  PayoffEvaluator eval(game, scheme, profile);
  const Strategy s = profile[processor];
  return make_report(processor, s, eval.utility_if(processor, s), eval.utility_if(processor, flip(s)));
}

DeviationReport unilateral_deviation(const StrategyProfile& profile, std::size_t processor,
                                     const UtilityFunction& utility) {
  if (processor >= profile.size()) throw ShapeError("processor index out of range");
  return make_report(processor, profile[processor], utility(profile, processor),
                     utility(profile.flipped(processor), processor));
}

NashCertificate is_nash(const Game& game, const StrategyProfile& profile, Scheme scheme) {
  require_scheme(scheme);
  PayoffEvaluator eval(game, scheme, profile);
  NashCertificate cert{profile, true, {}};
  for (std::size_t i = 0; i < profile.size(); ++i) {
    const Strategy s = profile[i];
    auto report = make_report(i, s, eval.utility_if(i, s), eval.utility_if(i, flip(s)));
    if (report.profitable) cert.witnesses.push_back(report);
  }
  cert.is_nash = cert.witnesses.empty();
  return cert;
}

NashCertificate is_nash(const StrategyProfile& profile, const UtilityFunction& utility) {
  NashCertificate cert{profile, true, {}};
  for (std::size_t i = 0; i < profile.size(); ++i) {
    auto report = unilateral_deviation(profile, i, utility);
    if (report.profitable) cert.witnesses.push_back(report);
  }
  cert.is_nash = cert.witnesses.empty();
  return cert;
}

std::vector<NashCertificate> enumerate_nash(const Game& game, Scheme scheme) {
  require_scheme(scheme);
  const std::size_t n = game.instance.num_processors();
  if (n > kMaxEnumerationProcessors) {
    throw SizeGuardError("exhaustive equilibrium search covers at most " +
                         std::to_string(kMaxEnumerationProcessors) + " processors, game has " + std::to_string(n));
  }
  std::vector<NashCertificate> out;
  const std::uint64_t profiles = std::uint64_t{1} << n;
  for (std::uint64_t mask = 0; mask < profiles; ++mask) {
    auto profile = StrategyProfile::from_mask(n, mask);
    PayoffEvaluator eval(game, scheme, profile);
    bool stable = true;
    for (std::size_t i = 0; i < n && stable; ++i) {
      const Strategy s = profile[i];
      stable = !(eval.utility_if(i, flip(s)) > eval.utility_if(i, s));
    }
    if (stable) out.push_back(NashCertificate{std::move(profile), true, {}});
  }
  return out;
}

// --- cooperative equilibrium conditions -------------------------------------

CooperativeConditions check_cooperative_conditions(const Game& game, const StrategyProfile& profile) {
  const auto& inst = game.instance;
  const auto& shape = inst.shape();
  if (profile.size() != inst.num_processors()) throw ShapeError("profile size does not match instance");

  CooperativeConditions out;
  out.processor_ok.assign(inst.num_processors(), true);
  out.consensus_reached = block_committed(inst, profile);
  out.aligned_profitable = true;
  out.divergent_profitable = true;
  out.maximal = true;

  const std::size_t k = shape.num_shards();
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t l = profile.cooperators_in(shape, j);
    const std::uint64_t y = inst.consensus_tx_count(j);
    const std::size_t first = shape.first_processor(j);
    for (std::size_t i = first; i < first + shape.committee_size(j); ++i) {
      const std::uint64_t x = inst.tx_count(i);
      bool ok = true;
      if (profile[i] == Strategy::Cooperate) {
        if (inst.aligned(i)) {
          ok = cooperation_margin(game.costs, game.rewards, k, l, x, x) >= 0.0;
          out.aligned_profitable = out.aligned_profitable && ok;
        } else {
          ok = cooperation_margin(game.costs, game.rewards, k, l, y, x) > 0.0;
          out.divergent_profitable = out.divergent_profitable && ok;
        }
      } else {
        ok = cooperation_margin(game.costs, game.rewards, k, l + 1, y, x) <= 0.0;
        out.maximal = out.maximal && ok;
      }
      out.processor_ok[i] = ok;
    }
  }
  return out;
}

}  // namespace shardgame
