#pragma once

// Seeded random small games for property and acceptance checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "shardgame/game.hpp"

namespace gen {

using Rng = std::mt19937_64;

inline double log_uniform(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

/// Log-uniform over [1e-3, 1e4], exactly zero with probability `zero_p`.
inline double money(Rng& rng, double zero_p = 0.1) {
  if (std::bernoulli_distribution(zero_p)(rng)) return 0.0;
  return log_uniform(rng, 1e-3, 1e4);
}

inline std::uint64_t tx(Rng& rng, std::uint64_t lo = 0) {
  return std::uniform_int_distribution<std::uint64_t>(lo, 100)(rng);
}

struct Options {
  std::size_t max_n = 12;
  std::size_t max_shards = 3;
  std::size_t min_committee = 1;
  std::size_t min_tau = 1;
  /// Keep tau strictly below the committee size.
  bool slack = false;
  double aligned_p = 0.75;
  /// Lower bound on a divergent processor's tx count (1 keeps every
  /// divergent view distinct from the empty view).
  std::uint64_t min_divergent_tx = 0;
  /// Same |y| and tau in every shard and rewards tuned so that aligned
  /// cooperation pays at l = tau but not at l = tau + 1.
  bool tight = false;
  /// Draw c^f from (0, inf) so that cooperating always costs something.
  bool positive_fixed_optional = false;
};

inline shardgame::Game small_game(Rng& rng, const Options& opt = {}) {
  using namespace shardgame;
  const std::size_t min_size = std::max({opt.min_committee, opt.min_tau + (opt.slack ? 1 : 0), std::size_t{1}});
  const std::size_t max_k = std::max<std::size_t>(1, std::min(opt.max_shards, opt.max_n / min_size));
  const std::size_t k = std::uniform_int_distribution<std::size_t>(1, max_k)(rng);
  const std::size_t max_size = opt.max_n / k;

  std::vector<std::size_t> sizes(k);
  std::vector<std::size_t> taus(k);
  for (std::size_t j = 0; j < k; ++j) sizes[j] = std::uniform_int_distribution<std::size_t>(min_size, max_size)(rng);
  const std::size_t min_n = *std::min_element(sizes.begin(), sizes.end());
  const std::size_t common_tau =
      std::uniform_int_distribution<std::size_t>(std::max<std::size_t>(opt.min_tau, 1), min_n - (opt.slack ? 1 : 0))(rng);
  for (std::size_t j = 0; j < k; ++j) {
    taus[j] = opt.tight ? common_tau
                        : std::uniform_int_distribution<std::size_t>(std::max<std::size_t>(opt.min_tau, 1),
                                                                     sizes[j] - (opt.slack ? 1 : 0))(rng);
  }
  NetworkShape shape(sizes, taus);

  const std::uint64_t common_y = tx(rng);
  std::vector<std::uint64_t> consensus(k);
  for (auto& y : consensus) y = opt.tight ? common_y : tx(rng);
  std::bernoulli_distribution aligned_draw(opt.aligned_p);
  std::vector<std::uint64_t> x(shape.num_processors());
  std::vector<bool> aligned(shape.num_processors());
  for (std::size_t i = 0; i < x.size(); ++i) {
    aligned[i] = aligned_draw(rng);
    x[i] = aligned[i] ? consensus[shape.shard_of(i)] : tx(rng, opt.min_divergent_tx);
  }

  Game g;
  g.instance = EpochInstance(shape, x, consensus, aligned);
  g.costs = {money(rng), money(rng), money(rng)};
  if (opt.positive_fixed_optional) g.costs.fixed_optional = log_uniform(rng, 1e-3, 1e4);
  g.rewards = {money(rng), money(rng)};
  if (opt.tight) {
    const double y = static_cast<double>(common_y);
    const double co = g.costs.fixed_optional + y * g.costs.per_tx_verification;
    const double u = std::uniform_real_distribution<double>(0.05, 0.95)(rng);
    const double pool = co * (static_cast<double>(common_tau) + u);  // BR/k + r|y|
    const double fee_share = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    g.rewards.per_tx_fee = y > 0 ? fee_share * pool / y : 0.0;
    g.rewards.block_reward = std::max(0.0, static_cast<double>(k) * (pool - g.rewards.per_tx_fee * y));
  }
  return g;
}

}  // namespace gen
