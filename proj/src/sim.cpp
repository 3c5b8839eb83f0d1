#include "shardgame/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <thread>

#include <fmt/format.h>

#include "shardgame/errors.hpp"

namespace shardgame {

std::string_view to_string(Dynamics d) noexcept {
  return d == Dynamics::BestResponse ? "best-response" : "threshold";
}

std::string_view to_string(SweepVariable v) noexcept {
  switch (v) {
    case SweepVariable::AvgTx:
      return "avg_tx";
    case SweepVariable::BlockReward:
      return "block_reward";
    case SweepVariable::NumProcessors:
      return "num_processors";
  }
  return "?";
}

std::optional<SweepVariable> parse_sweep_variable(std::string_view text) noexcept {
  if (text == "avg_tx") return SweepVariable::AvgTx;
  if (text == "block_reward") return SweepVariable::BlockReward;
  if (text == "num_processors") return SweepVariable::NumProcessors;
  return std::nullopt;
}

std::size_t TauRule::apply(std::size_t committee) const {
  std::size_t tau = 0;
  switch (kind) {
    case Kind::Majority:
      tau = committee / 2 + 1;
      break;
    case Kind::Fraction:
      tau = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(committee))));
      break;
    case Kind::Absolute:
      tau = absolute;
      break;
  }
  if (tau < 1 || tau > committee) {
    throw ShapeError("committee of " + std::to_string(committee) + " cannot meet consensus threshold " +
                     std::to_string(tau));
  }
  return tau;
}

std::string TauRule::to_string() const {
  switch (kind) {
    case Kind::Majority:
      return "majority";
    case Kind::Fraction:
      return fmt::format("{}", fraction);
    case Kind::Absolute:
      return std::to_string(absolute);
  }
  return "?";
}

void SimConfig::validate() const {
  if (target_n < 1) throw std::invalid_argument("num_processors must be positive");
  if (committee_size < 1) throw std::invalid_argument("committee_size must be positive");
  if (!(divergence_rate >= 0.0 && divergence_rate <= 1.0)) {
    throw std::invalid_argument("divergence_rate must lie in [0, 1]");
  }
  if (iterations < 1) throw std::invalid_argument("iterations must be at least 1");
  if (tau.kind == TauRule::Kind::Fraction && !(tau.fraction > 0.0 && tau.fraction <= 1.0)) {
    throw std::invalid_argument("tau fraction must lie in (0, 1]");
  }
  if (tau.kind == TauRule::Kind::Absolute) {
    if (tau.absolute < 1) throw std::invalid_argument("absolute tau must be positive");
    if (tau.absolute > committee_size) throw std::invalid_argument("committee_size is smaller than tau");
  }
  costs.validate();
  rewards.validate();
}

void SweepSpec::validate() const {
  if (values.empty()) throw std::invalid_argument("sweep needs at least one value");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || values[i] < 0.0) throw std::invalid_argument("sweep values must be finite and >= 0");
    if (i > 0 && !(values[i] > values[i - 1])) throw std::invalid_argument("sweep values must be strictly increasing");
  }
  base.validate();
}

// --- instance generation ----------------------------------------------------

namespace {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class Jitter {
 public:
  explicit Jitter(std::mt19937_64& rng) : rng_(rng) {}

  /// value * (1 + U(-1%, +1%)) rounded to the nearest integer, at least `floor`.
  std::uint64_t operator()(double value, std::uint64_t floor) {
    const long long v = std::llround(value * (1.0 + dist_(rng_)));
    return std::max<std::uint64_t>(floor, v < 0 ? 0 : static_cast<std::uint64_t>(v));
  }

 private:
  std::mt19937_64& rng_;
  std::uniform_real_distribution<double> dist_{-0.01, 0.01};
};

}  // namespace

std::uint64_t epoch_seed(std::uint64_t master, std::uint64_t sweep_index, std::uint64_t iteration) noexcept {
  return splitmix64(splitmix64(splitmix64(master) ^ sweep_index) ^ iteration);
}

EpochInstance generate_epoch(const SimConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Jitter jitter(rng);

  const auto n = jitter(static_cast<double>(config.target_n), 1);
  const auto k = std::max<std::uint64_t>(
      1, std::llround(static_cast<double>(n) / static_cast<double>(config.committee_size)));
  const double base = static_cast<double>(n) / static_cast<double>(k);

  std::vector<std::size_t> sizes(k);
  std::vector<std::size_t> taus(k);
  std::vector<std::uint64_t> consensus(k);
  for (std::size_t j = 0; j < k; ++j) {
    sizes[j] = jitter(base, 1);
    taus[j] = config.tau.apply(sizes[j]);
    consensus[j] = jitter(static_cast<double>(config.avg_tx), 0);
  }
  NetworkShape shape(std::move(sizes), std::move(taus));

  std::bernoulli_distribution diverges(config.divergence_rate);
  std::vector<std::uint64_t> tx(shape.num_processors());
  std::vector<bool> aligned(shape.num_processors());
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t first = shape.first_processor(j);
    for (std::size_t i = first; i < first + shape.committee_size(j); ++i) {
      aligned[i] = !diverges(rng);
      tx[i] = aligned[i] ? consensus[j] : jitter(static_cast<double>(config.avg_tx), 0);
    }
  }
  return EpochInstance(std::move(shape), std::move(tx), std::move(consensus), std::move(aligned));
}

// --- strategy dynamics ------------------------------------------------------

StrategyProfile fair_threshold_profile(const Game& game) {
  const auto& inst = game.instance;
  const auto& shape = inst.shape();
  const std::size_t k = shape.num_shards();
  auto profile = StrategyProfile::all(inst.num_processors(), Strategy::Defect);

  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t first = shape.first_processor(j);
    const std::size_t last = first + shape.committee_size(j);
    const std::uint64_t y = inst.consensus_tx_count(j);
    std::size_t l = 0;
    for (std::size_t i = first; i < last; ++i) l += inst.aligned(i) ? 1 : 0;
    if (l == 0) return StrategyProfile::all(inst.num_processors(), Strategy::Defect);

    // Everyone who profits at the current estimate joins. At a fixed size the
    // margin only falls with the processor's own tx count, so the group sheds
    // its most expensive members until the rest profit at the group's own
    // size. Processors with equal counts are indistinguishable without a
    // coordinator and leave together; for the aligned class that means the
    // whole consensus group.
    std::vector<std::size_t> group;
    for (std::size_t i = first; i < last; ++i) {
      if (cooperation_margin(game.costs, game.rewards, k, l, y, inst.tx_count(i)) > 0.0) group.push_back(i);
    }
    std::sort(group.begin(), group.end(), [&](std::size_t a, std::size_t b) {
      const auto xa = inst.tx_count(a);
      const auto xb = inst.tx_count(b);
      return xa != xb ? xa < xb : a < b;
    });
    while (!group.empty()) {
      const auto top = inst.tx_count(group.back());
      if (cooperation_margin(game.costs, game.rewards, k, group.size(), y, top) > 0.0) break;
      while (!group.empty() && inst.tx_count(group.back()) == top) group.pop_back();
    }

    std::size_t aligned_members = 0;
    for (auto i : group) aligned_members += inst.aligned(i) ? 1 : 0;
    if (aligned_members < shape.threshold(j)) return StrategyProfile::all(inst.num_processors(), Strategy::Defect);
    for (auto i : group) profile.set(i, Strategy::Cooperate);
  }
  return profile;
}

namespace {

/// Synchronous best response from All-Cooperate; ties resolve toward Defect.
template <typename MakeEvaluator>
StrategyDecision iterate_best_response(std::size_t n, MakeEvaluator make_evaluator) {
  StrategyDecision out;
  out.profile = StrategyProfile::all(n, Strategy::Cooperate);
  out.converged = false;
  for (out.rounds = 0; out.rounds < kMaxBestResponseRounds; ++out.rounds) {
    const auto eval = make_evaluator(out.profile);
    std::vector<Strategy> next(n);
    for (std::size_t i = 0; i < n; ++i) {
      next[i] = eval.utility_if(i, Strategy::Cooperate) > eval.utility_if(i, Strategy::Defect) ? Strategy::Cooperate
                                                                                             : Strategy::Defect;
    }
    StrategyProfile candidate(std::move(next));
    if (candidate == out.profile) {
      out.converged = true;
      break;
    }
    out.profile = std::move(candidate);
  }
  return out;
}

}  // namespace

StrategyDecision decide_strategies(const EpochInstance& instance, const SimConfig& config) {
  const Game game{instance, config.costs, config.rewards};
  const std::size_t n = instance.num_processors();

  if (config.scheme == Scheme::IncentiveCompatible) {
    auto round = run_coordination(game, CoordinatorOptions{config.admit_divergent});
    StrategyDecision out;
    if (config.dynamics == Dynamics::BestResponse) {
      const auto& decisions = round.decisions;
      out = iterate_best_response(n, [&](const StrategyProfile& p) { return SettlementEvaluator(game, decisions, p); });
    } else {
      out.profile = recommended_profile(round.decisions);
    }
    out.announcements = std::move(round.announcements);
    out.recommendations = std::move(round.decisions);
    return out;
  }

  if (config.dynamics == Dynamics::BestResponse) {
    return iterate_best_response(n, [&](const StrategyProfile& p) { return PayoffEvaluator(game, config.scheme, p); });
  }

  StrategyDecision out;
  out.profile = config.scheme == Scheme::Uniform ? StrategyProfile::all(n, Strategy::Defect)
                                                 : fair_threshold_profile(game);
  return out;
}

EpochRun run_epoch(const EpochInstance& instance, const SimConfig& config) {
  auto decision = decide_strategies(instance, config);
  const Game game{instance, config.costs, config.rewards};
  EpochRun run;
  run.converged = decision.converged;
  if (config.scheme != Scheme::IncentiveCompatible) {
    run.outcome = evaluate_epoch(game, config.scheme, decision.profile);
    return run;
  }

  auto& out = run.outcome;
  const auto ledger =
      settle(instance, decision.announcements, decision.recommendations, decision.profile, config.rewards);
  out.profile = decision.profile;
  out.shard_success.resize(instance.num_shards());
  for (std::size_t j = 0; j < instance.num_shards(); ++j) out.shard_success[j] = shard_success(instance, out.profile, j);
  out.block_committed = ledger.block_committed;
  out.utility = settled_utilities(instance, ledger, out.profile, config.costs);
  out.total_fees = total_fees(instance, config.rewards);
  out.cooperation_ratio =
      static_cast<double>(out.profile.cooperators()) / static_cast<double>(instance.num_processors());
  return run;
}

// --- sweeps -----------------------------------------------------------------

SimConfig apply_sweep_point(const SweepSpec& spec, double value) {
  SimConfig c = spec.base;
  switch (spec.varying) {
    case SweepVariable::AvgTx:
      c.avg_tx = static_cast<std::uint64_t>(std::llround(value));
      break;
    case SweepVariable::BlockReward:
      c.rewards.block_reward = value;
      break;
    case SweepVariable::NumProcessors:
      c.target_n = static_cast<std::size_t>(std::llround(value));
      break;
  }
  return c;
}

namespace {

struct EpochStats {
  double cooperation_ratio = 0.0;
  double defection_ratio = 0.0;
  double coop_utility_sum = 0.0;
  double defect_utility_sum = 0.0;
  std::size_t cooperators = 0;
  std::size_t defectors = 0;
  bool committed = false;
  bool converged = true;
  bool failed = false;
  std::string error;
};

EpochStats run_one(const SimConfig& config, std::uint64_t seed) {
  EpochStats s;
  try {
    const auto instance = generate_epoch(config, seed);
    const auto run = run_epoch(instance, config);
    const auto& o = run.outcome;
    const double n = static_cast<double>(instance.num_processors());
    for (std::size_t i = 0; i < instance.num_processors(); ++i) {
      if (o.profile[i] == Strategy::Cooperate) {
        s.coop_utility_sum += o.utility[i];
        ++s.cooperators;
      } else {
        s.defect_utility_sum += o.utility[i];
        ++s.defectors;
      }
    }
    s.cooperation_ratio = static_cast<double>(s.cooperators) / n;
    s.defection_ratio = static_cast<double>(s.defectors) / n;
    s.committed = o.block_committed;
    s.converged = run.converged;
  } catch (const ShapeError& e) {
    s.failed = true;
    s.error = e.what();
  }
  return s;
}

}  // namespace

std::vector<AggregateResult> run_sweep(const SweepSpec& spec, std::size_t workers) {
  spec.validate();
  const std::size_t points = spec.values.size();
  const std::size_t iters = spec.base.iterations;

  std::vector<SimConfig> configs;
  configs.reserve(points);
  for (double v : spec.values) configs.push_back(apply_sweep_point(spec, v));

  std::vector<EpochStats> stats(points * iters);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t task = next++; task < stats.size(); task = next++) {
      const std::size_t p = task / iters;
      const std::size_t it = task % iters;
      stats[task] = run_one(configs[p], epoch_seed(spec.base.seed, p, it));
    }
  };
  if (workers == 0) workers = std::max(1U, std::thread::hardware_concurrency());
  workers = std::min(workers, stats.size());
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  // Reduction in fixed (point, iteration) order.
  std::vector<AggregateResult> out(points);
  for (std::size_t p = 0; p < points; ++p) {
    auto& r = out[p];
    r.sweep_point = spec.values[p];
    r.iterations = iters;
    double coop_sum = 0.0, defect_sum = 0.0, ucoop = 0.0, udefect = 0.0;
    std::size_t ncoop = 0, ndefect = 0, committed = 0;
    for (std::size_t it = 0; it < iters; ++it) {
      const auto& s = stats[p * iters + it];
      if (s.failed) {
        r.failed = true;
        r.error = s.error;
        break;
      }
      coop_sum += s.cooperation_ratio;
      defect_sum += s.defection_ratio;
      ucoop += s.coop_utility_sum;
      udefect += s.defect_utility_sum;
      ncoop += s.cooperators;
      ndefect += s.defectors;
      committed += s.committed ? 1 : 0;
      r.nonconverged_epochs += s.converged ? 0 : 1;
    }
    if (r.failed) continue;
    const double count = static_cast<double>(iters);
    r.mean_cooperation_ratio = coop_sum / count;
    r.mean_defection_ratio = defect_sum / count;
    r.mean_utility_cooperators = ncoop ? ucoop / static_cast<double>(ncoop) : 0.0;
    r.mean_utility_defectors = ndefect ? udefect / static_cast<double>(ndefect) : 0.0;
    r.weighted_mean_utility = r.mean_cooperation_ratio * r.mean_utility_cooperators +
                              r.mean_defection_ratio * r.mean_utility_defectors;
    r.block_commit_rate = static_cast<double>(committed) / count;
  }
  return out;
}

}  // namespace shardgame
