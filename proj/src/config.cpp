#include "shardgame/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

#include "shardgame/errors.hpp"

namespace shardgame {

namespace {

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    const auto item = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    out.push_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_double(std::string_view text, std::size_t line, std::string_view what) {
  double v = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (text.empty() || ec != std::errc{} || ptr != last || !std::isfinite(v)) {
    throw ConfigError(line, fmt::format("{}: expected a finite number, got '{}'", what, text));
  }
  return v;
}

std::uint64_t parse_u64(std::string_view text, std::size_t line, std::string_view what) {
  std::uint64_t v = 0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (text.empty() || ec != std::errc{} || ptr != last) {
    throw ConfigError(line, fmt::format("{}: expected a non-negative integer, got '{}'", what, text));
  }
  return v;
}

double parse_nonneg(std::string_view text, std::size_t line, std::string_view what) {
  const double v = parse_double(text, line, what);
  if (v < 0.0) throw ConfigError(line, fmt::format("{} must be >= 0", what));
  return v;
}

bool parse_bool(std::string_view text, std::size_t line, std::string_view what) {
  if (text == "true" || text == "yes" || text == "1") return true;
  if (text == "false" || text == "no" || text == "0") return false;
  throw ConfigError(line, fmt::format("{}: expected true or false, got '{}'", what, text));
}

TauRule parse_tau(std::string_view text, std::size_t line) {
  if (text == "majority") return TauRule::majority();
  if (text.find_first_of(".eE") != std::string_view::npos) {
    const double f = parse_double(text, line, "tau");
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError(line, "tau fraction must lie in (0, 1]");
    return TauRule::of_fraction(f);
  }
  const auto t = parse_u64(text, line, "tau");
  if (t < 1) throw ConfigError(line, "tau must be positive");
  return TauRule::of_absolute(static_cast<std::size_t>(t));
}

std::string tau_text(const TauRule& tau) {
  if (tau.kind != TauRule::Kind::Fraction) return tau.to_string();
  auto s = fmt::format("{}", tau.fraction);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

Dynamics parse_dynamics(std::string_view text, std::size_t line) {
  if (text == "threshold") return Dynamics::ThresholdRule;
  if (text == "best-response" || text == "best_response") return Dynamics::BestResponse;
  throw ConfigError(line, fmt::format("dynamics: expected threshold or best-response, got '{}'", text));
}

Scheme parse_scheme_at(std::string_view text, std::size_t line) {
  if (auto s = parse_scheme(text)) return *s;
  throw ConfigError(line, fmt::format("unknown scheme '{}' (expected uniform, fair or ic)", text));
}

// "a:b:step" (inclusive of b when it lands on the grid) or "v1, v2, ...".
std::vector<double> parse_values(std::string_view text, std::size_t line) {
  std::vector<double> values;
  if (text.find(':') != std::string_view::npos) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
      const auto colon = text.find(':', start);
      parts.push_back(trim(text.substr(start, colon == std::string_view::npos ? std::string_view::npos : colon - start)));
      if (colon == std::string_view::npos) break;
      start = colon + 1;
    }
    if (parts.size() != 3) throw ConfigError(line, "values range must be start:stop:step");
    const double a = parse_nonneg(parts[0], line, "range start");
    const double b = parse_nonneg(parts[1], line, "range stop");
    const double step = parse_double(parts[2], line, "range step");
    if (!(step > 0.0)) throw ConfigError(line, "range step must be positive");
    if (b < a) throw ConfigError(line, "range stop is below range start");
    const double span = (b - a) / step;
    if (span > 1e6) throw ConfigError(line, "range has too many points");
    const auto count = static_cast<std::size_t>(std::floor(span + 1e-9)) + 1;
    for (std::size_t i = 0; i < count; ++i) values.push_back(a + static_cast<double>(i) * step);
    return values;
  }
  if (trim(text).empty()) throw ConfigError(line, "sweep needs at least one value");
  for (auto item : split_list(text)) values.push_back(parse_nonneg(item, line, "sweep value"));
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (!(values[i] > values[i - 1])) throw ConfigError(line, "sweep values must be strictly increasing");
  }
  return values;
}

class EntryTracker {
 public:
  void claim(const IniEntry& e) {
    const auto key = e.section + "." + e.key;
    if (auto [it, inserted] = seen_.emplace(key, e.line); !inserted) {
      throw ConfigError(e.line, fmt::format("duplicate key '{}' in [{}] (first set on line {})", e.key, e.section,
                                            it->second));
    }
  }
  std::size_t line_of(const std::string& section, const std::string& key) const {
    auto it = seen_.find(section + "." + key);
    return it == seen_.end() ? 0 : it->second;
  }

 private:
  std::map<std::string, std::size_t> seen_;
};

[[noreturn]] void unknown_key(const IniEntry& e) {
  throw ConfigError(e.line, fmt::format("unknown key '{}' in [{}]", e.key, e.section));
}

bool apply_cost_or_reward(const IniEntry& e, CostParams& costs, RewardParams& rewards) {
  if (e.section == "costs") {
    if (e.key == "mandatory") costs.mandatory = parse_nonneg(e.value, e.line, e.key);
    else if (e.key == "fixed_optional") costs.fixed_optional = parse_nonneg(e.value, e.line, e.key);
    else if (e.key == "per_tx_verification") costs.per_tx_verification = parse_nonneg(e.value, e.line, e.key);
    else unknown_key(e);
    return true;
  }
  if (e.section == "rewards") {
    if (e.key == "block_reward") rewards.block_reward = parse_nonneg(e.value, e.line, e.key);
    else if (e.key == "per_tx_fee") rewards.per_tx_fee = parse_nonneg(e.value, e.line, e.key);
    else unknown_key(e);
    return true;
  }
  return false;
}

std::string fmt_num(double v) { return fmt::format("{}", v); }

}  // namespace

std::vector<IniEntry> parse_ini(std::string_view text) {
  std::vector<IniEntry> entries;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const auto line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(line_no, "unterminated section header");
      const auto name = trim(line.substr(1, line.size() - 2));
      if (name.empty()) throw ConfigError(line_no, "empty section name");
      section = std::string(name);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(line_no, fmt::format("expected 'key = value', got '{}'", line));
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(line_no, "missing key before '='");
    if (section.empty()) throw ConfigError(line_no, fmt::format("key '{}' appears before any [section]", key));
    entries.push_back({section, std::string(key), std::string(trim(line.substr(eq + 1))), line_no});
  }
  return entries;
}

RunConfig parse_run_config(std::string_view text) {
  RunConfig cfg;
  SimConfig& base = cfg.sweep.base;
  EntryTracker tracker;
  bool have_variable = false;
  bool have_values = false;

  for (const auto& e : parse_ini(text)) {
    tracker.claim(e);
    if (apply_cost_or_reward(e, base.costs, base.rewards)) continue;
    if (e.section == "run") {
      if (e.key == "name") {
        if (e.value.empty() || e.value.find_first_of("/\\ \t") != std::string::npos) {
          throw ConfigError(e.line, "name must be non-empty without spaces or slashes");
        }
        cfg.name = e.value;
      } else if (e.key == "schemes") {
        cfg.schemes.clear();
        for (auto item : split_list(e.value)) {
          const auto s = parse_scheme_at(item, e.line);
          if (std::find(cfg.schemes.begin(), cfg.schemes.end(), s) != cfg.schemes.end()) {
            throw ConfigError(e.line, fmt::format("scheme '{}' listed twice", item));
          }
          cfg.schemes.push_back(s);
        }
      } else if (e.key == "dynamics") {
        base.dynamics = parse_dynamics(e.value, e.line);
      } else if (e.key == "iterations") {
        base.iterations = static_cast<std::size_t>(parse_u64(e.value, e.line, e.key));
        if (base.iterations < 1) throw ConfigError(e.line, "iterations must be at least 1");
      } else if (e.key == "seed") {
        base.seed = parse_u64(e.value, e.line, e.key);
      } else if (e.key == "admit_divergent") {
        base.admit_divergent = parse_bool(e.value, e.line, e.key);
      } else {
        unknown_key(e);
      }
    } else if (e.section == "shape") {
      if (e.key == "num_processors") {
        base.target_n = static_cast<std::size_t>(parse_u64(e.value, e.line, e.key));
        if (base.target_n < 1) throw ConfigError(e.line, "num_processors must be positive");
      } else if (e.key == "committee_size") {
        base.committee_size = static_cast<std::size_t>(parse_u64(e.value, e.line, e.key));
        if (base.committee_size < 1) throw ConfigError(e.line, "committee_size must be positive");
      } else if (e.key == "tau") {
        base.tau = parse_tau(e.value, e.line);
      } else if (e.key == "divergence_rate") {
        base.divergence_rate = parse_double(e.value, e.line, e.key);
        if (base.divergence_rate < 0.0 || base.divergence_rate > 1.0) {
          throw ConfigError(e.line, "divergence_rate must lie in [0, 1]");
        }
      } else if (e.key == "avg_tx") {
        base.avg_tx = parse_u64(e.value, e.line, e.key);
      } else {
        unknown_key(e);
      }
    } else if (e.section == "sweep") {
      if (e.key == "variable") {
        auto v = parse_sweep_variable(e.value);
        if (!v) {
          throw ConfigError(e.line, fmt::format("sweep variable must be avg_tx, block_reward or num_processors, got '{}'",
                                                e.value));
        }
        cfg.sweep.varying = *v;
        have_variable = true;
      } else if (e.key == "values") {
        cfg.sweep.values = parse_values(e.value, e.line);
        have_values = true;
      } else {
        unknown_key(e);
      }
    } else if (e.section == "output") {
      if (e.key == "chart") {
        if (e.value == "ratio") cfg.chart = ChartKind::Ratio;
        else if (e.value == "utility") cfg.chart = ChartKind::Utility;
        else throw ConfigError(e.line, fmt::format("chart must be ratio or utility, got '{}'", e.value));
      } else {
        unknown_key(e);
      }
    } else {
      throw ConfigError(e.line, fmt::format("unknown section [{}]", e.section));
    }
  }

  if (have_variable != have_values) {
    throw ConfigError(tracker.line_of("sweep", have_variable ? "variable" : "values"),
                      "[sweep] needs both 'variable' and 'values'");
  }
  if (!have_variable) {
    // A single point at the base configuration.
    cfg.sweep.varying = SweepVariable::AvgTx;
    cfg.sweep.values = {static_cast<double>(base.avg_tx)};
  }
  cfg.has_sweep = have_variable;

  if (base.tau.kind == TauRule::Kind::Absolute && base.tau.absolute > base.committee_size) {
    const auto line = std::max(tracker.line_of("shape", "tau"), tracker.line_of("shape", "committee_size"));
    throw ConfigError(line, fmt::format("committee_size {} is smaller than tau {}", base.committee_size,
                                        base.tau.absolute));
  }
  try {
    cfg.sweep.validate();
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(tracker.line_of("sweep", "values"), ex.what());
  }
  return cfg;
}

std::string to_config_text(const RunConfig& config) {
  const SimConfig& b = config.sweep.base;
  std::string out;
  out += "[run]\n";
  out += fmt::format("name = {}\n", config.name);
  std::string schemes;
  for (std::size_t i = 0; i < config.schemes.size(); ++i) {
    if (i > 0) schemes += ", ";
    schemes += to_string(config.schemes[i]);
  }
  out += fmt::format("schemes = {}\n", schemes);
  out += fmt::format("dynamics = {}\n", to_string(b.dynamics));
  out += fmt::format("iterations = {}\n", b.iterations);
  out += fmt::format("seed = {}\n", b.seed);
  out += fmt::format("admit_divergent = {}\n", b.admit_divergent ? "true" : "false");
  out += "\n[shape]\n";
  out += fmt::format("num_processors = {}\n", b.target_n);
  out += fmt::format("committee_size = {}\n", b.committee_size);
  out += fmt::format("tau = {}\n", tau_text(b.tau));
  out += fmt::format("divergence_rate = {}\n", fmt_num(b.divergence_rate));
  out += fmt::format("avg_tx = {}\n", b.avg_tx);
  out += "\n[costs]\n";
  out += fmt::format("mandatory = {}\n", fmt_num(b.costs.mandatory));
  out += fmt::format("fixed_optional = {}\n", fmt_num(b.costs.fixed_optional));
  out += fmt::format("per_tx_verification = {}\n", fmt_num(b.costs.per_tx_verification));
  out += "\n[rewards]\n";
  out += fmt::format("block_reward = {}\n", fmt_num(b.rewards.block_reward));
  out += fmt::format("per_tx_fee = {}\n", fmt_num(b.rewards.per_tx_fee));
  if (config.has_sweep) {
    out += "\n[sweep]\n";
    out += fmt::format("variable = {}\n", to_string(config.sweep.varying));
    std::string values;
    for (std::size_t i = 0; i < config.sweep.values.size(); ++i) {
      if (i > 0) values += ", ";
      values += fmt_num(config.sweep.values[i]);
    }
    out += fmt::format("values = {}\n", values);
  }
  out += "\n[output]\n";
  out += fmt::format("chart = {}\n", config.chart == ChartKind::Ratio ? "ratio" : "utility");
  return out;
}

const Preset* find_preset(std::string_view name) {
  for (const auto& p : presets()) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

GameDescription parse_game_description(std::string_view text) {
  GameDescription desc;
  EntryTracker tracker;
  struct ShardSpec {
    std::size_t tau = 0;
    std::uint64_t consensus_tx = 0;
    bool has_tau = false;
    bool has_tx = false;
    std::vector<std::pair<bool, std::uint64_t>> processors;  // (aligned, tx or 0)
    bool has_processors = false;
    std::size_t line = 0;
  };
  std::map<std::size_t, ShardSpec> shards;
  std::size_t last_line = 0;

  for (const auto& e : parse_ini(text)) {
    tracker.claim(e);
    last_line = e.line;
    if (apply_cost_or_reward(e, desc.game.costs, desc.game.rewards)) continue;
    if (e.section == "game") {
      if (e.key == "scheme") desc.scheme = parse_scheme_at(e.value, e.line);
      else unknown_key(e);
      continue;
    }
    if (e.section.rfind("shard.", 0) == 0) {
      const auto index = parse_u64(std::string_view(e.section).substr(6), e.line, "shard index");
      auto& s = shards[static_cast<std::size_t>(index)];
      if (s.line == 0) s.line = e.line;
      if (e.key == "tau") {
        s.tau = static_cast<std::size_t>(parse_u64(e.value, e.line, e.key));
        if (s.tau < 1) throw ConfigError(e.line, "tau must be positive");
        s.has_tau = true;
      } else if (e.key == "consensus_tx") {
        s.consensus_tx = parse_u64(e.value, e.line, e.key);
        s.has_tx = true;
      } else if (e.key == "processors") {
        for (auto item : split_list(e.value)) {
          if (item == "a") {
            s.processors.emplace_back(true, 0);
          } else if (item.size() > 1 && item.front() == 'u') {
            s.processors.emplace_back(false, parse_u64(item.substr(1), e.line, "divergent tx count"));
          } else {
            throw ConfigError(e.line, fmt::format("processor entry must be 'a' or 'u<count>', got '{}'", item));
          }
        }
        s.has_processors = true;
      } else {
        unknown_key(e);
      }
      continue;
    }
    throw ConfigError(e.line, fmt::format("unknown section [{}]", e.section));
  }

  if (shards.empty()) throw ConfigError(last_line, "game needs at least one [shard.N] section");
  std::size_t expected = 0;
  std::vector<std::size_t> sizes;
  std::vector<std::size_t> taus;
  std::vector<std::uint64_t> tx;
  std::vector<std::uint64_t> consensus;
  std::vector<bool> aligned;
  for (const auto& [index, s] : shards) {
    if (index != expected) throw ConfigError(s.line, fmt::format("shard indices must be 0..k-1; missing shard.{}", expected));
    ++expected;
    if (!s.has_tau || !s.has_tx || !s.has_processors) {
      throw ConfigError(s.line, fmt::format("[shard.{}] needs tau, consensus_tx and processors", index));
    }
    if (s.tau > s.processors.size()) {
      throw ConfigError(s.line, fmt::format("[shard.{}] has {} processors, fewer than tau {}", index,
                                            s.processors.size(), s.tau));
    }
    sizes.push_back(s.processors.size());
    taus.push_back(s.tau);
    consensus.push_back(s.consensus_tx);
    for (const auto& [is_aligned, count] : s.processors) {
      aligned.push_back(is_aligned);
      tx.push_back(is_aligned ? s.consensus_tx : count);
    }
  }
  try {
    desc.game.instance = EpochInstance(NetworkShape(sizes, taus), tx, consensus, aligned);
    desc.game.costs.validate();
    desc.game.rewards.validate();
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(last_line, ex.what());
  }
  return desc;
}

}  // namespace shardgame
