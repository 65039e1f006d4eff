// lfdyn: run, sweep and check leader-follower opinion scenarios.
//
// Exit status: 0 success, 1 validation or usage error, 2 runtime failure.
// LFDYN_OUTPUT_DIR sets the default output directory (else ".").

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "lfdyn/lfdyn.hpp"

namespace fs = std::filesystem;
using namespace lfdyn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitRuntime = 2;

std::string default_output_dir() {
  const char* env = std::getenv("LFDYN_OUTPUT_DIR");
  return env != nullptr && *env != '\0' ? env : ".";
}

// A path to a config file, or the name of a built-in preset.
ScenarioConfig load_config(const std::string& where) {
  if (fs::exists(where)) return parse_config(read_text_file(where));
  if (auto text = preset_text(where)) return parse_config(*text);
  throw ValidationError("no config file or preset named '" + where + "'");
}

std::pair<std::uint64_t, std::uint64_t> parse_seed_range(const std::string& text) {
  const auto dots = text.find("..");
  auto num = [&](const std::string& s) -> std::uint64_t {
    std::size_t used = 0;
    std::uint64_t v = 0;
    try {
      v = std::stoull(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size() || s.front() == '-')
      throw ValidationError("--seeds: expected a..b or a single seed, got '" + text + "'");
    return v;
  };
  if (dots == std::string::npos) {
    const auto s = num(text);
    return {s, s};
  }
  const auto a = num(text.substr(0, dots));
  const auto b = num(text.substr(dots + 2));
  if (b < a) throw ValidationError("--seeds: range " + text + " is empty");
  return {a, b};
}

std::string in_dir(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void print_report(const HypothesisReport& r) {
  std::cout << "theorem " << r.theorem;
  if (!r.subject.empty()) std::cout << " [" << r.subject << "]";
  std::cout << ": " << to_string(r.verdict) << "  window [" << r.window_begin << ", " << r.window_end << ")";
  if (r.counterexample_step) std::cout << "  counterexample at t=" << *r.counterexample_step;
  std::cout << "\n";
  for (const auto& [k, v] : r.scalars) std::cout << "    " << k << " = " << v << "\n";
  for (const auto& [k, v] : r.flags) std::cout << "    " << k << " = " << (v ? "true" : "false") << "\n";
  if (!r.note.empty()) std::cout << "    note: " << r.note << "\n";
}

struct RunArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  unsigned threads{1};
};

struct RunOutcome {
  Scenario scenario;
  Trajectory trajectory;
  ScenarioConfig config;
};

RunOutcome execute(const RunArgs& args) {
  RunOutcome o;
  o.config = load_config(args.config);
  if (args.seed) o.config.seed = *args.seed;
  o.scenario = build_scenario(o.config);
  EngineOptions engine;
  engine.search = o.config.neighbor_search;
  engine.threads = args.threads;
  o.trajectory = run(o.scenario, engine);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Leader-follower opinion dynamics simulator"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "Run a scenario and write trajectory.csv and metrics.json");
  run_cmd->add_option("config", run_args.config, "Config file or preset name (figure1, figure2)")->required();
  run_cmd->add_option("--out", run_args.out, "Output directory (default $LFDYN_OUTPUT_DIR or .)");
  run_cmd->add_option("--seed", run_args.seed, "Override the config seed");
  run_cmd->add_option("--threads", run_args.threads, "Worker threads within a step")->check(CLI::PositiveNumber);
  std::string trajectory_path, metrics_path;
  run_cmd->add_option("--trajectory", trajectory_path, "Trajectory CSV path (overrides config and --out)");
  run_cmd->add_option("--metrics", metrics_path, "Metrics JSON path (overrides config and --out)");

  std::string sweep_config, sweep_seeds, sweep_out;
  unsigned sweep_workers = 1;
  double sweep_tol = 1e-6;
  bool sweep_trajectories = false;
  auto* sweep_cmd = app.add_subcommand("sweep", "Independent runs over a seed range");
  sweep_cmd->add_option("config", sweep_config, "Config file or preset name")->required();
  sweep_cmd->add_option("--seeds", sweep_seeds, "Seed range a..b (inclusive)")->required();
  sweep_cmd->add_option("--workers", sweep_workers, "Concurrent runs")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--tol", sweep_tol, "Convergence tolerance on the limit gap");
  sweep_cmd->add_option("--out", sweep_out, "Output directory for sweep.json");
  sweep_cmd->add_flag("--trajectories", sweep_trajectories, "Also write trajectory_seed<N>.csv per seed");

  RunArgs check_args;
  std::string theorem;
  double delta = Theorem1Options{}.delta;
  auto* check_cmd = app.add_subcommand("check", "Run a scenario and report the convergence hypotheses");
  check_cmd->add_option("config", check_args.config, "Config file or preset name")->required();
  check_cmd->add_option("--theorem", theorem, "Only this check")->check(CLI::IsMember({"1", "2", "c1", "c2"}));
  check_cmd->add_option("--delta", delta, "Threshold for the recurring max-alpha check");
  check_cmd->add_option("--seed", check_args.seed, "Override the config seed");
  check_cmd->add_option("--out", check_args.out, "Also write metrics.json here");

  std::string plot_input, plot_output;
  auto* plot_cmd = app.add_subcommand("plot-data", "Reshape a trajectory CSV into per-agent time series");
  plot_cmd->add_option("trajectory", plot_input, "Trajectory CSV written by run")->required();
  plot_cmd->add_option("--output", plot_output, "Output CSV (default <out dir>/plot_data.csv, '-' for stdout)");

  std::string validate_config_path;
  auto* validate_cmd = app.add_subcommand("validate", "Parse and validate a config without running it");
  validate_cmd->add_option("config", validate_config_path, "Config file or preset name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  try {
    if (*run_cmd) {
      const auto o = execute(run_args);
      const std::string dir = run_args.out.empty() ? default_output_dir() : run_args.out;
      std::string tpath = !trajectory_path.empty() ? trajectory_path
                          : (!o.config.trajectory_path.empty() && run_args.out.empty())
                              ? o.config.trajectory_path
                              : in_dir(dir, "trajectory.csv");
      std::string mpath = !metrics_path.empty() ? metrics_path
                          : (!o.config.metrics_path.empty() && run_args.out.empty())
                              ? o.config.metrics_path
                              : in_dir(dir, "metrics.json");
      for (const auto& p : {tpath, mpath})
        if (auto parent = fs::path(p).parent_path(); !parent.empty()) fs::create_directories(parent);
      write_trajectory(o.trajectory, o.scenario.structure, tpath);
      write_metrics(o.trajectory, o.scenario, hypothesis_reports(o.scenario, o.trajectory), mpath, o.config.name);
      std::cout << "ran " << o.trajectory.metrics.size() << " steps (" << to_string(o.trajectory.terminal)
                << ")\nwrote " << tpath << "\nwrote " << mpath << "\n";
      return kExitOk;
    }

    if (*sweep_cmd) {
      const ScenarioConfig config = load_config(sweep_config);
      SweepOptions opts;
      std::tie(opts.first_seed, opts.last_seed) = parse_seed_range(sweep_seeds);
      opts.workers = sweep_workers;
      opts.tolerance = sweep_tol;
      const std::string dir = sweep_out.empty() ? default_output_dir() : sweep_out;
      if (sweep_trajectories) opts.trajectory_dir = in_dir(dir, "trajectories");
      const SweepResult result = sweep(config, opts);
      fs::create_directories(dir);
      const std::string path = in_dir(dir, "sweep.json");
      write_text_file(path, to_json(result, opts.tolerance).dump(1) + "\n");
      for (const auto& r : result.runs) {
        std::cout << "seed " << r.seed << ": " << to_string(r.terminal) << " at t=" << r.final_t;
        if (r.converged_at)
          std::cout << ", converged at t=" << *r.converged_at;
        else
          std::cout << ", not converged";
        std::cout << "\n";
      }
      const auto& s = result.stats;
      std::cout << "converged " << s.converged << "/" << s.runs;
      if (s.mean) std::cout << "  steps min " << *s.min << " median " << *s.median << " mean " << *s.mean << " max " << *s.max;
      std::cout << "\nwrote " << path << "\n";
      return kExitOk;
    }

    if (*check_cmd) {
      check_args.threads = 1;
      const auto o = execute(check_args);
      Theorem1Options t1;
      t1.delta = delta;
      std::optional<std::string_view> only;
      if (!theorem.empty()) only = theorem;
      const auto reports = hypothesis_reports(o.scenario, o.trajectory, only, t1);
      for (const auto& r : reports) print_report(r);
      if (!check_args.out.empty()) {
        fs::create_directories(check_args.out);
        write_metrics(o.trajectory, o.scenario, reports, in_dir(check_args.out, "metrics.json"), o.config.name);
      }
      return kExitOk;
    }

    if (*plot_cmd) {
      const std::string text = plot_data_csv(read_trajectory(plot_input));
      if (plot_output == "-") {
        std::cout << text;
        return kExitOk;
      }
      const std::string path = plot_output.empty() ? in_dir(default_output_dir(), "plot_data.csv") : plot_output;
      if (auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
      write_text_file(path, text);
      std::cout << "wrote " << path << "\n";
      return kExitOk;
    }

    if (*validate_cmd) {
      const ScenarioConfig config = load_config(validate_config_path);
      const Scenario s = build_scenario(config);
      std::cout << "ok: " << s.structure.n_agents << " agents, " << s.structure.group_count() << " leader group(s), "
                << s.structure.followers.size() << " follower(s), d=" << s.structure.dim() << "\n";
      return kExitOk;
    }
  } catch (const ValidationError& e) {
    std::cerr << "invalid:\n";
    for (const auto& p : e.problems()) std::cerr << "  " << p << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitInvalid;
}
