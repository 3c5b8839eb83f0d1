#pragma once

// Flat key-value configuration ("[section]" headers, "key = value" lines,
// '#' comments). Unknown sections or keys are errors; every diagnostic
// carries the offending line number.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "shardgame/game.hpp"
#include "shardgame/sim.hpp"

namespace shardgame {

struct IniEntry {
  std::string section;
  std::string key;
  std::string value;
  std::size_t line = 0;
};

std::vector<IniEntry> parse_ini(std::string_view text);

enum class ChartKind : std::uint8_t { Ratio, Utility };

/// Everything a `sweep` invocation needs. `sweep.base.scheme` is overwritten
/// per entry of `schemes`.
struct RunConfig {
  std::string name = "sweep";
  SweepSpec sweep;
  bool has_sweep = false;
  std::vector<Scheme> schemes{Scheme::Fair};
  ChartKind chart = ChartKind::Ratio;
};

RunConfig parse_run_config(std::string_view text);

/// Canonical text that parses back to the same RunConfig.
std::string to_config_text(const RunConfig& config);

struct Preset {
  std::string_view name;
  std::string_view text;
};

const std::vector<Preset>& presets();
const Preset* find_preset(std::string_view name);

/// A small explicit game for exhaustive analysis:
///
///   [game]     scheme = fair
///   [costs]    ...   [rewards] ...
///   [shard.0]  tau = 2
///              consensus_tx = 30
///              processors = a, a, u28    # a: aligned, uN: divergent with N txs
struct GameDescription {
  Game game;
  Scheme scheme = Scheme::Fair;
};

GameDescription parse_game_description(std::string_view text);

}  // namespace shardgame
