// smadrl: train, evaluate and analyze stigmergic multi-agent DQN teams.
//
// Exit codes: 0 success, 2 config error, 3 divergence, 4 I/O error.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "smadrl/analysis.hpp"
#include "smadrl/checkpoint.hpp"
#include "smadrl/config.hpp"
#include "smadrl/errors.hpp"
#include "smadrl/format.hpp"
#include "smadrl/harness.hpp"
#include "smadrl/trace.hpp"

namespace fs = std::filesystem;
using namespace smadrl;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kDivergence = 3, kIo = 4 };

std::mutex g_log_mutex;

void log_line(const std::string& msg) {
  std::lock_guard<std::mutex> lock(g_log_mutex);
  std::cerr << msg << '\n';
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

int threads_cap() {
  if (const char* env = std::getenv("SMADRL_THREADS")) {
    try {
      const long long n = parse_int(env);
      if (n >= 1) return static_cast<int>(n);
    } catch (const std::invalid_argument&) {
    }
    throw ConfigError("SMADRL_THREADS must be a positive integer");
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

int exit_code_for(const std::exception_ptr& error) {
  try {
    std::rethrow_exception(error);
  } catch (const ConfigError& e) {
    log_line(std::string("config error: ") + e.what());
    return kConfig;
  } catch (const DivergenceError& e) {
    log_line(std::string("divergence: ") + e.what());
    return kDivergence;
  } catch (const IoError& e) {
    log_line(std::string("i/o error: ") + e.what());
    return kIo;
  } catch (const std::exception& e) {
    log_line(std::string("error: ") + e.what());
    return kFailure;
  }
}

// One training run into `dir`. Timing goes to a sidecar so the other files
// are byte-identical across reruns.
void train_one(const ExperimentConfig& config, std::uint64_t seed, const fs::path& dir) {
  ensure_dir(dir);
  Trainer trainer(config, seed);
  try {
    while (!trainer.finished()) {
      const EpisodeLog& e = trainer.run_episode();
      std::ostringstream msg;
      msg << "[seed " << seed << "] episode " << e.episode << " phase " << e.phase << " pellets "
          << e.total_pellets << " collisions " << e.collisions;
      log_line(msg.str());
    }
  } catch (const DivergenceError&) {
    save_checkpoint(trainer.checkpoint(), (dir / "diagnostic.ckpt").string());
    auto out = open_out(dir / "train_log.csv");
    write_train_log_csv(out, trainer.log());
    throw;
  }
  save_checkpoint(trainer.checkpoint(), (dir / "checkpoint.ckpt").string());
  {
    auto out = open_out(dir / "train_log.csv");
    write_train_log_csv(out, trainer.log());
  }
  auto timing = open_out(dir / "train_log.timing.csv");
  write_timing_csv(timing, trainer.log());
}

int cmd_train(const std::string& config_path, const std::vector<std::uint64_t>& seeds_opt,
              const std::string& out_opt) {
  const ExperimentConfig config = load_config(config_path);
  const std::vector<std::uint64_t> seeds = seeds_opt.empty() ? config.run.seeds : seeds_opt;
  const fs::path out = out_opt.empty() ? fs::path(config.run.output_dir) : fs::path(out_opt);

  if (seeds.size() == 1) {
    train_one(config, seeds.front(), out);
    return kOk;
  }

  // Independent experiments, one per seed, in per-seed subdirectories.
  const int workers = std::min<int>(threads_cap(), static_cast<int>(seeds.size()));
  std::atomic<std::size_t> next{0};
  std::vector<int> codes(seeds.size(), kOk);
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < seeds.size(); k = next++) {
        try {
          train_one(config, seeds[k], out / ("seed_" + std::to_string(seeds[k])));
        } catch (...) {
          codes[k] = exit_code_for(std::current_exception());
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (int c : codes) {
    if (c != kOk) return c;
  }
  return kOk;
}

struct EvalArgs {
  std::string checkpoint;
  std::string config;
  std::string out = "eval";
  std::string trace;
  std::string pheromone_csv;
  int pheromone_every = 0;
  int episodes = 10;
  int steps = 0;
  std::uint64_t seed = 0;
  bool random = false;
};

std::string window_label(int episodes, int steps) {
  return std::to_string(episodes) + " episodes x " + std::to_string(steps) + " steps";
}

Workload summed_workload(const std::vector<EpisodeMetrics>& metrics, std::size_t agents) {
  Workload total(agents, 0);
  for (const auto& m : metrics) {
    for (std::size_t i = 0; i < agents && i < m.workload.size(); ++i) total[i] += m.workload[i];
  }
  return total;
}

int cmd_eval(const EvalArgs& args) {
  const Checkpoint ckpt = load_checkpoint(args.checkpoint);
  if (!args.config.empty()) check_compatible(ckpt, load_config(args.config));

  const fs::path out(args.out);
  ensure_dir(out);
  EvalOptions options;
  options.episodes = args.episodes;
  options.seed = args.seed;
  options.steps_per_episode = args.steps;
  options.random_policy = args.random;
  options.keep_trace = !args.trace.empty();
  std::ofstream pheromone;
  if (!args.pheromone_csv.empty()) {
    pheromone = open_out(args.pheromone_csv);
    options.pheromone_csv = &pheromone;
    options.pheromone_every = std::max(1, args.pheromone_every);
  }

  const EvalResult result = args.random ? evaluate_random(ckpt.config, options) : evaluate(ckpt, options);
  {
    auto csv = open_out(out / "metrics.csv");
    write_metrics_csv(csv, result.metrics);
  }
  const int steps = args.steps > 0 ? args.steps : ckpt.config.episode_length;
  LorenzReport report;
  report[ckpt.config.num_agents] = make_lorenz_entry(
      summed_workload(result.metrics, static_cast<std::size_t>(ckpt.config.num_agents)),
      window_label(args.episodes, steps));
  {
    auto json = open_out(out / "lorenz.json");
    write_lorenz_json(json, report);
  }
  if (!args.trace.empty()) {
    auto trace = open_out(args.trace);
    write_trace(trace, result.trace);
  }
  std::int64_t pellets = 0;
  for (const auto& m : result.metrics) pellets += m.total_pellets;
  log_line("evaluated " + std::to_string(result.metrics.size()) + " episodes, " +
           std::to_string(pellets) + " pellets");
  return kOk;
}

void write_clogs_csv(std::ostream& out, const std::vector<ClogEvent>& events) {
  out << "episode,start,duration\n";
  for (const auto& e : events) out << e.episode << ',' << e.start << ',' << e.duration << '\n';
}

int cmd_analyze(const std::vector<std::string>& traces, const std::vector<std::string>& metrics_files,
                const std::string& config_path, const std::string& out_dir) {
  if (traces.empty() && metrics_files.empty()) throw ConfigError("analyze: give --trace or --metrics");
  const fs::path out(out_dir);
  ensure_dir(out);
  LorenzReport report;

  if (!traces.empty()) {
    if (config_path.empty()) throw ConfigError("analyze: --trace needs --config for the arena layout");
    const ExperimentConfig config = load_config(config_path);
    const GridLayout layout = GridLayout::chambers(config.arena);
    std::vector<EpisodeMetrics> all;
    std::vector<ClogEvent> clogs;
    for (const auto& path : traces) {
      std::ifstream in(path);
      if (!in) throw IoError("cannot open trace '" + path + "'");
      const auto trace = read_trace(in);
      if (trace.empty()) throw IoError("trace '" + path + "' is empty");
      for (const auto& r : trace) {
        for (const auto& a : r.agents) {
          if (!layout.in_bounds(a.position) || !layout.walkable(a.position)) {
            throw IoError("trace '" + path + "' has a position outside the arena");
          }
        }
      }
      auto m = trace_metrics(layout, trace, config.analysis);
      const auto c = detect_clogs(layout, trace, config.analysis.clog_threshold);
      clogs.insert(clogs.end(), c.begin(), c.end());
      const std::size_t team = trace.front().agents.size();
      int steps = 0;
      for (const auto& r : trace) steps = std::max(steps, r.step);
      const auto workload = summed_workload(m, team);
      LorenzEntry entry = make_lorenz_entry(workload, window_label(static_cast<int>(m.size()), steps));
      if (report.count(static_cast<int>(team))) {
        Workload merged = report[static_cast<int>(team)].workload;
        for (std::size_t i = 0; i < team; ++i) merged[i] += workload[i];
        entry = make_lorenz_entry(merged, "merged traces");
      }
      report[static_cast<int>(team)] = entry;
      all.insert(all.end(), m.begin(), m.end());
    }
    if (traces.size() == 1) {
      auto csv = open_out(out / "metrics.csv");
      write_metrics_csv(csv, all);
    }
    auto clog_csv = open_out(out / "clogs.csv");
    write_clogs_csv(clog_csv, clogs);
  }

  for (const auto& path : metrics_files) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open metrics '" + path + "'");
    const auto rows = read_metrics_csv(in);
    if (rows.empty()) throw IoError("metrics '" + path + "' has no rows");
    const std::size_t team = rows.front().workload.size();
    report[static_cast<int>(team)] =
        make_lorenz_entry(summed_workload(rows, team), std::to_string(rows.size()) + " episodes");
  }

  auto json = open_out(out / "lorenz.json");
  write_lorenz_json(json, report);
  for (const auto& [team, entry] : report) {
    log_line("team " + std::to_string(team) + ": gini " + format_double(entry.gini));
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stigmergic multi-agent deep Q-learning workbench"};
  app.require_subcommand(1);

  std::string train_config;
  std::uint64_t train_seed = 0;
  std::vector<std::uint64_t> train_seeds;
  std::string train_out;
  auto* train = app.add_subcommand("train", "Train a team and write checkpoint + train log");
  train->add_option("config", train_config, "Experiment config (JSON)")->required();
  auto* seed_opt = train->add_option("--seed", train_seed, "Single seed (overrides run.seeds)");
  train->add_option("--seeds", train_seeds, "Comma-separated seeds, one experiment each")
      ->delimiter(',')
      ->excludes(seed_opt);
  train->add_option("--out", train_out, "Output directory (default run.output_dir)");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Evaluate greedy policies from a checkpoint");
  eval->add_option("checkpoint", eval_args.checkpoint, "Checkpoint file")->required();
  eval->add_option("--episodes", eval_args.episodes, "Evaluation episodes")->check(CLI::NonNegativeNumber);
  eval->add_option("--seed", eval_args.seed, "Evaluation seed");
  eval->add_option("--steps", eval_args.steps, "Steps per episode (default from config)")
      ->check(CLI::NonNegativeNumber);
  eval->add_option("--out", eval_args.out, "Output directory for metrics.csv and lorenz.json");
  eval->add_option("--trace", eval_args.trace, "Write the per-step trace (NDJSON) here");
  eval->add_option("--config", eval_args.config, "Check this config against the checkpoint");
  eval->add_option("--pheromone-csv", eval_args.pheromone_csv, "Dump pheromone maps here");
  eval->add_option("--pheromone-every", eval_args.pheromone_every, "Dump interval in steps");
  eval->add_flag("--random", eval_args.random, "Use a uniform random policy (baseline)");

  std::vector<std::string> analyze_traces;
  std::vector<std::string> analyze_metrics;
  std::string analyze_config;
  std::string analyze_out = "analysis";
  auto* analyze = app.add_subcommand("analyze", "Lorenz/Gini/clog/strategy reports");
  analyze->add_option("--trace", analyze_traces, "Trace file(s) from eval --trace");
  analyze->add_option("--metrics", analyze_metrics, "Metrics CSV file(s) from eval");
  analyze->add_option("--config", analyze_config, "Experiment config (arena layout for traces)");
  analyze->add_option("--out", analyze_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (train->parsed()) {
      std::vector<std::uint64_t> seeds = train_seeds;
      if (seed_opt->count() > 0) seeds = {train_seed};
      return cmd_train(train_config, seeds, train_out);
    }
    if (eval->parsed()) return cmd_eval(eval_args);
    if (analyze->parsed()) return cmd_analyze(analyze_traces, analyze_metrics, analyze_config, analyze_out);
  } catch (...) {
    return exit_code_for(std::current_exception());
  }
  return kFailure;
}
