#pragma once

// Seed sweeps: one independent run per seed, spread over worker threads.
// Results are stored by seed position, so the merged output does not depend
// on the worker count or on completion order.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "lfdyn/config.hpp"
#include "lfdyn/engine.hpp"
#include "lfdyn/io.hpp"
#include "lfdyn/parallel.hpp"

namespace lfdyn {

struct SweepOptions {
  std::uint64_t first_seed{0};
  std::uint64_t last_seed{0};  // inclusive
  unsigned workers{1};
  /// A run counts as converged at the first state whose gap is <= tolerance.
  double tolerance{1e-6};
  /// When nonempty, each seed's trajectory is written to
  /// <dir>/trajectory_seed<seed>.csv by the worker that ran it.
  std::string trajectory_dir;
};

struct SweepRun {
  std::uint64_t seed{0};
  std::uint64_t final_t{0};
  TerminalReason terminal{TerminalReason::max_steps};
  std::vector<double> final_leader_distance;
  std::vector<double> final_follower_distance;
  std::optional<double> final_limit_gap;
  std::optional<std::uint64_t> converged_at;
};

struct SweepStats {
  std::size_t runs{0};
  std::size_t converged{0};
  std::optional<double> min;
  std::optional<double> max;
  std::optional<double> mean;
  std::optional<double> median;
};

struct SweepResult {
  std::vector<SweepRun> runs;  // seed order
  SweepStats stats;
};

/// Gap of the state after a step: distance to the predicted limit when every
/// follower has one, otherwise the largest leader distance to its target.
inline double convergence_gap(const StepRecord& rec) {
  if (rec.limit_gap) return *rec.limit_gap;
  double worst = 0.0;
  for (double c : rec.leader_distance) worst = std::max(worst, c);
  return worst;
}

inline SweepStats sweep_statistics(const std::vector<SweepRun>& runs) {
  SweepStats s;
  s.runs = runs.size();
  std::vector<double> steps;
  for (const auto& r : runs)
    if (r.converged_at) steps.push_back(static_cast<double>(*r.converged_at));
  s.converged = steps.size();
  if (steps.empty()) return s;
  std::sort(steps.begin(), steps.end());
  s.min = steps.front();
  s.max = steps.back();
  double total = 0.0;
  for (double v : steps) total += v;
  s.mean = total / static_cast<double>(steps.size());
  const std::size_t mid = steps.size() / 2;
  s.median = steps.size() % 2 == 1 ? steps[mid] : 0.5 * (steps[mid - 1] + steps[mid]);
  return s;
}

inline SweepRun summarize_run(std::uint64_t seed, const Trajectory& traj, double tolerance) {
  SweepRun r;
  r.seed = seed;
  r.final_t = traj.final_t();
  r.terminal = traj.terminal;
  if (traj.metrics.empty()) {
    r.final_leader_distance = traj.initial_leader_distance;
    r.final_follower_distance = traj.initial_follower_distance;
  } else {
    const auto& last = traj.metrics.back();
    r.final_leader_distance = last.leader_distance;
    r.final_follower_distance = last.follower_distance;
    r.final_limit_gap = last.limit_gap;
  }
  for (const auto& rec : traj.metrics)
    if (convergence_gap(rec) <= tolerance) {
      r.converged_at = rec.t + 1;
      break;
    }
  return r;
}

inline SweepResult sweep(const ScenarioConfig& base, const SweepOptions& options) {
  if (options.last_seed < options.first_seed) throw ValidationError("sweep: seed range is empty");
  if (!(options.tolerance >= 0.0)) throw ValidationError("sweep: tolerance must be >= 0");
  // Validate once up front so a bad config fails before any worker starts.
  build_scenario(base);
  if (!options.trajectory_dir.empty()) std::filesystem::create_directories(options.trajectory_dir);

  const std::size_t count = static_cast<std::size_t>(options.last_seed - options.first_seed) + 1;
  SweepResult result;
  result.runs.resize(count);
  parallel_for(count, options.workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t idx = begin; idx < end; ++idx) {
      ScenarioConfig config = base;
      config.seed = options.first_seed + idx;
      const Scenario scenario = build_scenario(config);
      EngineOptions engine;
      engine.search = config.neighbor_search;
      engine.record_degrees = false;
      const Trajectory traj = run(scenario, engine);
      result.runs[idx] = summarize_run(config.seed, traj, options.tolerance);
      if (!options.trajectory_dir.empty())
        write_trajectory(traj, scenario.structure,
                         (std::filesystem::path(options.trajectory_dir) /
                          ("trajectory_seed" + std::to_string(config.seed) + ".csv"))
                             .string());
    }
  });
  result.stats = sweep_statistics(result.runs);
  return result;
}

inline nlohmann::json to_json(const SweepResult& result, double tolerance) {
  auto opt = [](const auto& v) { return v ? nlohmann::json(*v) : nlohmann::json(); };
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : result.runs)
    runs.push_back({{"seed", r.seed},
                    {"final_t", r.final_t},
                    {"terminal_reason", std::string(to_string(r.terminal))},
                    {"final_leader_distance", r.final_leader_distance},
                    {"final_follower_distance", r.final_follower_distance},
                    {"final_limit_gap", opt(r.final_limit_gap)},
                    {"converged_at", opt(r.converged_at)}});
  const auto& s = result.stats;
  return {{"tolerance", tolerance},
          {"runs", std::move(runs)},
          {"convergence_steps",
           {{"runs", s.runs},
            {"converged", s.converged},
            {"min", opt(s.min)},
            {"max", opt(s.max)},
            {"mean", opt(s.mean)},
            {"median", opt(s.median)}}}};
}

}  // namespace lfdyn
