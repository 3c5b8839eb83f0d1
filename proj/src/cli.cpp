#include "shardgame/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "shardgame/chart.hpp"
#include "shardgame/config.hpp"
#include "shardgame/digest.hpp"
#include "shardgame/equilibrium.hpp"
#include "shardgame/errors.hpp"
#include "shardgame/protocol.hpp"
#include "shardgame/report.hpp"
#include "shardgame/sim.hpp"

namespace shardgame {

namespace {

namespace fs = std::filesystem;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot read {}", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void print(std::ostream& os, std::string_view s) { os << s; }

// Where a run configuration comes from: exactly one of the three.
struct ConfigSource {
  std::string config_path;
  std::string preset;
  std::string manifest_path;
};

RunConfig load_run_config(const ConfigSource& src) {
  const int given = !src.config_path.empty() + !src.preset.empty() + !src.manifest_path.empty();
  if (given != 1) throw ConfigError(0, "give exactly one of --config, --preset or --manifest");
  if (!src.preset.empty()) {
    const auto* p = find_preset(src.preset);
    if (p == nullptr) throw ConfigError(0, fmt::format("unknown preset '{}' (try `presets list`)", src.preset));
    return parse_run_config(p->text);
  }
  if (!src.manifest_path.empty()) {
    RunManifest m;
    try {
      m = manifest_from_json(read_text_file(src.manifest_path));
    } catch (const IoError&) {
      throw;
    } catch (const std::runtime_error& ex) {
      throw ConfigError(0, ex.what());
    }
    return parse_run_config(m.config_text);
  }
  return parse_run_config(read_text_file(src.config_path));
}

struct Overrides {
  std::uint64_t seed = 0;
  bool has_seed = false;
  std::string scheme;
  std::string dynamics;
  std::size_t iterations = 0;
  bool has_iterations = false;
};

void apply_overrides(RunConfig& cfg, const Overrides& o) {
  auto& base = cfg.sweep.base;
  if (o.has_seed) base.seed = o.seed;
  if (!o.scheme.empty()) {
    const auto s = parse_scheme(o.scheme);
    if (!s) throw ConfigError(0, fmt::format("--scheme: unknown scheme '{}'", o.scheme));
    cfg.schemes = {*s};
  }
  if (!o.dynamics.empty()) {
    if (o.dynamics == "threshold") base.dynamics = Dynamics::ThresholdRule;
    else if (o.dynamics == "best-response") base.dynamics = Dynamics::BestResponse;
    else throw ConfigError(0, fmt::format("--dynamics: expected threshold or best-response, got '{}'", o.dynamics));
  }
  if (o.has_iterations) {
    if (o.iterations < 1) throw ConfigError(0, "--iterations must be at least 1");
    base.iterations = o.iterations;
  }
}

void add_source_options(CLI::App* cmd, ConfigSource& src) {
  cmd->add_option("--config", src.config_path, "configuration file");
  cmd->add_option("--preset", src.preset, "built-in preset (fig3, fig4, fig5, fig6)");
}

void add_override_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--seed", o.seed, "master seed")->each([&o](const std::string&) { o.has_seed = true; });
  cmd->add_option("--scheme", o.scheme, "uniform | fair | ic");
  cmd->add_option("--dynamics", o.dynamics, "threshold | best-response");
  cmd->add_option("--iterations", o.iterations, "epochs per sweep point")->each([&o](const std::string&) {
    o.has_iterations = true;
  });
}

// --- sweep -------------------------------------------------------------------

struct SweepArgs {
  ConfigSource source;
  Overrides overrides;
  std::string out_dir = ".";
  bool plot = false;
  std::size_t workers = 0;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig cfg = load_run_config(a.source);
  apply_overrides(cfg, a.overrides);
  try {
    cfg.sweep.validate();
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(0, ex.what());
  }

  const fs::path dir(a.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError(fmt::format("cannot create output directory {}", a.out_dir));

  RunManifest manifest;
  manifest.seed = cfg.sweep.base.seed;
  manifest.digest_algorithm = std::string(kDigestAlgorithm);
  manifest.config_text = to_config_text(cfg);
  manifest.started_at = iso8601_now();

  struct Written {
    fs::path path;
    std::string text;
  };
  std::vector<Written> files;

  for (const Scheme scheme : cfg.schemes) {
    SweepSpec spec = cfg.sweep;
    spec.base.scheme = scheme;
    const auto results = run_sweep(spec, a.workers);
    const auto rows = to_rows(spec.varying, scheme, results);
    const std::string stem = fmt::format("{}_{}", cfg.name, to_string(scheme));

    const std::string csv = format_csv(rows);
    files.push_back({dir / (stem + ".csv"), csv});
    manifest.outputs.push_back(stem + ".csv");
    if (a.plot) {
      // The chart is drawn from the CSV text, exactly as an external tool would.
      const auto svg = render_svg(parse_csv(csv), cfg.chart,
                                  fmt::format("{} ({} scheme)", cfg.name, to_string(scheme)));
      files.push_back({dir / (stem + ".svg"), svg});
      manifest.outputs.push_back(stem + ".svg");
    }

    out << fmt::format("scheme {} (sweeping {}):\n", to_string(scheme), to_string(spec.varying));
    for (const auto& r : results) {
      if (r.failed) {
        const auto note = fmt::format("{} {}={}: {}", to_string(scheme), to_string(spec.varying), r.sweep_point,
                                      r.error);
        err << "warning: sweep point failed: " << note << '\n';
        manifest.failed_points.push_back(note);
        continue;
      }
      out << fmt::format("  {:>10}  coop {:.3f}  defect {:.3f}  util {:>10.3f}  commit {:.2f}{}\n", r.sweep_point,
                         r.mean_cooperation_ratio, r.mean_defection_ratio, r.weighted_mean_utility,
                         r.block_commit_rate,
                         r.nonconverged_epochs ? fmt::format("  ({} epochs did not converge)", r.nonconverged_epochs)
                                               : std::string());
    }
  }
  manifest.finished_at = iso8601_now();

  for (const auto& f : files) write_file_atomic(f.path, f.text);
  const auto manifest_path = dir / (cfg.name + ".manifest.json");
  write_file_atomic(manifest_path, manifest_to_json(manifest));
  for (const auto& f : files) out << "wrote " << f.path.string() << '\n';
  out << "wrote " << manifest_path.string() << '\n';
  return kExitOk;
}

// --- analyze -----------------------------------------------------------------

struct AnalyzeArgs {
  std::string config_path;
  std::string scheme;
  std::string query;
  bool admit_divergent = false;
};

std::string fmt_threshold(double v) {
  if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
  return fmt::format("{:.6g}", v);
}

StrategyProfile parse_query(const std::string& q, std::size_t n) {
  if (q == "all-cooperate") return StrategyProfile::all(n, Strategy::Cooperate);
  if (q == "all-defect") return StrategyProfile::all(n, Strategy::Defect);
  if (q.size() != n || q.find_first_not_of("CD") != std::string::npos) {
    throw ConfigError(0, fmt::format("--query must be all-cooperate, all-defect or a {}-letter C/D string", n));
  }
  std::vector<Strategy> s;
  for (char c : q) s.push_back(c == 'C' ? Strategy::Cooperate : Strategy::Defect);
  return StrategyProfile(std::move(s));
}

void print_certificate(std::ostream& out, const NashCertificate& cert) {
  out << fmt::format("  {} is {}a Nash equilibrium\n", cert.profile.to_string(), cert.is_nash ? "" : "NOT ");
  for (const auto& w : cert.witnesses) {
    out << fmt::format("    witness: processor {} switching {} -> {} gains {:.6g} ({:.6g} -> {:.6g})\n", w.processor,
                       to_char(w.current_strategy), to_char(flip(w.current_strategy)), w.gain(), w.current_utility,
                       w.deviation_utility);
  }
}

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out) {
  auto desc = parse_game_description(read_text_file(a.config_path));
  if (!a.scheme.empty()) {
    const auto s = parse_scheme(a.scheme);
    if (!s) throw ConfigError(0, fmt::format("--scheme: unknown scheme '{}'", a.scheme));
    desc.scheme = *s;
  }
  const Game& game = desc.game;
  const auto& inst = game.instance;
  const auto& shape = inst.shape();
  const std::size_t n = inst.num_processors();
  if (n > kMaxEnumerationProcessors) {
    throw SizeGuardError(fmt::format("game has {} processors; exhaustive analysis is limited to {}. Split the game "
                                     "into smaller shards or analyze a sub-committee.",
                                     n, kMaxEnumerationProcessors));
  }

  out << fmt::format("game: {} processors, {} shards, scheme {}\n", n, shape.num_shards(), to_string(desc.scheme));
  for (std::size_t j = 0; j < shape.num_shards(); ++j) {
    std::size_t aligned = 0;
    for (std::size_t i = shape.first_processor(j); i < shape.first_processor(j) + shape.committee_size(j); ++i) {
      aligned += inst.aligned(i) ? 1 : 0;
    }
    const std::size_t l = std::max<std::size_t>(shape.threshold(j), 1);
    const auto th = compute_thresholds(game.costs, game.rewards, shape.num_shards(), l, inst.consensus_tx_count(j));
    out << fmt::format("shard {}: committee {}, tau {}, |y| {}, aligned {}; at l = tau: theta1 = {}, theta2 = {}\n", j,
                       shape.committee_size(j), shape.threshold(j), inst.consensus_tx_count(j), aligned,
                       fmt_threshold(th.theta1), th.theta2 ? fmt_threshold(*th.theta2) : "undefined (c^v = 0)");
  }

  if (desc.scheme == Scheme::IncentiveCompatible) {
    const auto round = run_coordination(game, CoordinatorOptions{a.admit_divergent});
    const auto recommended = recommended_profile(round.decisions);
    for (const auto& ann : round.announcements) {
      out << fmt::format("shard {}: verdict {}, l_j {}, theta1 {}, theta2 {}\n", ann.shard, to_string(ann.verdict),
                         ann.l_j, fmt_threshold(ann.theta1), fmt_threshold(ann.theta2));
    }
    out << fmt::format("recommended profile: {}\n", recommended.to_string());
    const UtilityFunction settled = [&](const StrategyProfile& p, std::size_t i) {
      return SettlementEvaluator(game, round.decisions, p).utility(i);
    };
    const auto cert = is_nash(recommended, settled);
    out << "obedience check under settlement:\n";
    print_certificate(out, cert);
    if (!a.query.empty()) print_certificate(out, is_nash(parse_query(a.query, n), settled));
    return kExitOk;
  }

  const auto equilibria = enumerate_nash(game, desc.scheme);
  out << fmt::format("{} pure Nash equilibria:\n", equilibria.size());
  for (const auto& eq : equilibria) {
    std::string l_values;
    for (std::size_t j = 0; j < shape.num_shards(); ++j) {
      if (j > 0) l_values += ' ';
      l_values += std::to_string(eq.profile.cooperators_in(shape, j));
    }
    out << fmt::format("  {}  l_j = [{}]", eq.profile.to_string(), l_values);
    if (desc.scheme == Scheme::Fair) {
      const auto c = check_cooperative_conditions(game, eq.profile);
      out << fmt::format("  cooperative conditions: {}{}", c.holds() ? "hold" : "do not hold",
                         c.stated_conditions() && !c.maximal ? " (not maximal)" : "");
    }
    out << '\n';
  }
  if (!a.query.empty()) {
    out << "query:\n";
    print_certificate(out, is_nash(game, parse_query(a.query, n), desc.scheme));
  }
  return kExitOk;
}

// --- epoch-trace ---------------------------------------------------------------

struct TraceArgs {
  ConfigSource source;
  Overrides overrides;
  std::size_t point = 0;
  std::size_t iteration = 0;
  std::vector<std::size_t> defect;
};

int cmd_epoch_trace(const TraceArgs& a, std::ostream& out) {
  RunConfig cfg = load_run_config(a.source);
  apply_overrides(cfg, a.overrides);
  if (!a.overrides.scheme.empty() && cfg.schemes.front() != Scheme::IncentiveCompatible) {
    throw ConfigError(0, "epoch-trace follows the incentive-compatible protocol; use --scheme ic");
  }
  if (a.point >= cfg.sweep.values.size()) {
    throw ConfigError(0, fmt::format("--point {} is out of range (sweep has {} points)", a.point,
                                     cfg.sweep.values.size()));
  }
  SimConfig sim;
  try {
    sim = apply_sweep_point(cfg.sweep, cfg.sweep.values[a.point]);
    sim.scheme = Scheme::IncentiveCompatible;
    sim.validate();
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(0, ex.what());
  }
  const auto seed = epoch_seed(sim.seed, a.point, a.iteration);
  EpochInstance inst;
  try {
    inst = generate_epoch(sim, seed);
  } catch (const ShapeError& ex) {
    throw ConfigError(0, ex.what());
  }
  const Game game{inst, sim.costs, sim.rewards};
  const auto& shape = inst.shape();
  const std::size_t n = inst.num_processors();
  for (auto p : a.defect) {
    if (p >= n) throw ConfigError(0, fmt::format("--defect {}: epoch has only {} processors", p, n));
  }

  out << fmt::format("epoch: seed {} (master {}, point {}, iteration {}), {} = {}\n", seed, sim.seed, a.point,
                     a.iteration, to_string(cfg.sweep.varying), cfg.sweep.values[a.point]);
  out << fmt::format("network: {} processors in {} shards; digests {}\n", n, shape.num_shards(), kDigestAlgorithm);

  const auto round = run_coordination(game, CoordinatorOptions{sim.admit_divergent});
  for (std::size_t j = 0; j < shape.num_shards(); ++j) {
    const auto subs = collect_submissions(inst, j);
    std::map<Digest, std::size_t> groups;
    for (const auto& s : subs) ++groups[s.view.digest];
    std::vector<std::pair<Digest, std::size_t>> ordered(groups.begin(), groups.end());
    std::stable_sort(ordered.begin(), ordered.end(), [](const auto& x, const auto& y) { return x.second > y.second; });
    const auto& ann = round.announcements[j];
    out << fmt::format("shard {}: committee {}, tau {}, {} digest groups\n", j, shape.committee_size(j),
                       shape.threshold(j), ordered.size());
    const std::size_t shown = std::min<std::size_t>(ordered.size(), 3);
    for (std::size_t g = 0; g < shown; ++g) {
      out << fmt::format("  digest {}... x{}\n", to_hex(ordered[g].first).substr(0, 16), ordered[g].second);
    }
    if (ordered.size() > shown) {
      out << fmt::format("  ... {} more singleton groups\n", ordered.size() - shown);
    }
    if (ann.verdict == Verdict::AllDefect) {
      out << fmt::format("  verdict All-D (largest group {} < tau {})\n", ann.l_j, shape.threshold(j));
    } else {
      out << fmt::format("  verdict Proceed: l_j = {} (majority {} + admitted {}), |y| estimate {}\n", ann.l_j,
                         ann.majority_group.size(), ann.cooperative_set.size() - ann.majority_group.size(),
                         ann.consensus_tx_estimate);
      out << fmt::format("  theta1 = {} ({} denominator), theta2 = {}\n", fmt_threshold(ann.theta1),
                         ann.theta1_denominator == Sign::Negative ? "negative"
                         : ann.theta1_denominator == Sign::Zero   ? "zero"
                                                                  : "positive",
                         fmt_threshold(ann.theta2));
    }
  }

  auto actual = recommended_profile(round.decisions);
  for (auto p : a.defect) actual.set(p, Strategy::Defect);
  const auto ledger = settle(inst, round.announcements, round.decisions, actual, sim.rewards);
  const auto utilities = settled_utilities(inst, ledger, actual, sim.costs);

  out << "decisions:\n";
  for (const auto& d : round.decisions) {
    const bool overridden = actual[d.processor] != d.decision;
    out << fmt::format("  p{} shard {} |x| {} {}: {} -> played {}{}, reward {:.6g}, utility {:.6g}\n", d.processor,
                       shape.shard_of(d.processor), inst.tx_count(d.processor),
                       inst.aligned(d.processor) ? "aligned" : "divergent", to_char(d.decision),
                       to_char(actual[d.processor]), overridden ? " (override)" : "", ledger.reward[d.processor],
                       utilities[d.processor]);
    out << fmt::format("    reason {}\n", to_string(d.reason));
  }
  const double br_tf = sim.rewards.block_reward + total_fees(inst, sim.rewards);
  out << fmt::format("settlement: block {}\n", ledger.block_committed ? "committed" : "not committed");
  out << fmt::format("  ledger total {:.6f}; BR + TF = {:.6f}\n", ledger.total(), br_tf);
  return kExitOk;
}

// --- presets -------------------------------------------------------------------

int cmd_presets_list(std::ostream& out) {
  for (const auto& p : presets()) out << p.name << '\n';
  return kExitOk;
}

int cmd_presets_show(const std::string& name, std::ostream& out) {
  const auto* p = find_preset(name);
  if (p == nullptr) throw ConfigError(0, fmt::format("unknown preset '{}'", name));
  print(out, p->text);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Shard game simulator: equilibria, incentive-compatible protocol and reward-sharing sweeps",
               "shardgame"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "run a parameter sweep and write CSV, manifest and optional SVG");
  add_source_options(sweep_cmd, sweep.source);
  sweep_cmd->add_option("--manifest", sweep.source.manifest_path, "re-run the configuration stored in a manifest");
  add_override_options(sweep_cmd, sweep.overrides);
  sweep_cmd->add_option("--out", sweep.out_dir, "output directory");
  sweep_cmd->add_flag("--plot", sweep.plot, "also render SVG charts");
  sweep_cmd->add_option("--workers", sweep.workers, "worker threads (0: hardware concurrency)");

  AnalyzeArgs analyze;
  auto* analyze_cmd = app.add_subcommand("analyze", "thresholds and pure Nash equilibria of a small game");
  analyze_cmd->add_option("--config", analyze.config_path, "game description file")->required();
  analyze_cmd->add_option("--scheme", analyze.scheme, "uniform | fair | ic (overrides the file)");
  analyze_cmd->add_option("--query", analyze.query, "all-cooperate, all-defect or a C/D string to certify");
  analyze_cmd->add_flag("--admit-divergent", analyze.admit_divergent, "ic: coordinator also recruits divergent views");

  TraceArgs trace;
  auto* trace_cmd = app.add_subcommand("epoch-trace", "step-by-step incentive-compatible protocol for one epoch");
  add_source_options(trace_cmd, trace.source);
  add_override_options(trace_cmd, trace.overrides);
  trace_cmd->add_option("--point", trace.point, "sweep point index");
  trace_cmd->add_option("--iteration", trace.iteration, "epoch index within the point");
  trace_cmd->add_option("--defect", trace.defect, "processor that defects regardless of its recommendation");

  auto* presets_cmd = app.add_subcommand("presets", "built-in sweep configurations");
  presets_cmd->require_subcommand(1);
  auto* presets_list = presets_cmd->add_subcommand("list", "list preset names");
  std::string show_name;
  auto* presets_show = presets_cmd->add_subcommand("show", "print a preset's configuration");
  presets_show->add_option("name", show_name, "preset name")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*sweep_cmd) return cmd_sweep(sweep, out, err);
    if (*analyze_cmd) return cmd_analyze(analyze, out);
    if (*trace_cmd) return cmd_epoch_trace(trace, out);
    if (*presets_list) return cmd_presets_list(out);
    if (*presets_show) return cmd_presets_show(show_name, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const SizeGuardError& e) {
    err << "size guard: " << e.what() << '\n';
    return kExitSizeGuard;
  } catch (const ShapeError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace shardgame
