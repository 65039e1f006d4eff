#pragma once

// Synchronous stepping and scenario runs. Every quantity used to produce
// x(t+1) (neighbor sets, degree draws, beta zeroing) is computed from the
// frozen state x(t); each agent writes only its own row of the new state.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lfdyn/errors.hpp"
#include "lfdyn/metrics.hpp"
#include "lfdyn/model.hpp"
#include "lfdyn/neighbors.hpp"
#include "lfdyn/parallel.hpp"
#include "lfdyn/philox.hpp"
#include "lfdyn/schedules.hpp"

namespace lfdyn {

struct OpinionState {
  std::uint64_t t{0};
  OpinionMatrix opinions;

  bool operator==(const OpinionState&) const = default;
};

/// Everything observed while advancing from t to t+1.
struct StepRecord {
  std::uint64_t t{0};  // time of the state that was read
  /// C^{(k)} at t+1, one per leader group.
  std::vector<double> leader_distance;
  /// max over followers of ||x_i - g_k|| at t+1, one per group (empty without followers).
  std::vector<double> follower_distance;
  /// Per group: max weight a leader put on its group-neighbor average
  /// (alpha in mixed mode, 1 - w in legacy mode).
  std::vector<double> max_alpha;
  /// max over followers of the effective weight on the follower average.
  std::optional<double> max_follower_self_weight;
  /// max_i ||x_i(t+1) - x_i(t)||
  double displacement{0.0};
  /// max_i ||x_i(t+1) - predicted limit of i||; empty when some follower has
  /// no leader weight (no predicted limit).
  std::optional<double> limit_gap;
  ConnectivityReport connectivity;
  std::size_t zeroed_betas{0};
  std::size_t legacy_reallocations{0};
  /// Effective degrees (after zeroing / reallocation); empty unless recorded.
  DegreeAssignment degrees;
};

struct EngineOptions {
  NeighborSearch search{NeighborSearch::automatic};
  unsigned threads{1};
  bool record_degrees{true};
};

class Stepper {
 public:
  Stepper(const GroupStructure& structure, const ModelParams& params, const ScheduleSet& schedules,
          RngKey key, EngineOptions options = {})
      : structure_(&structure),
        params_(&params),
        schedules_(&schedules),
        key_(key),
        options_(options),
        group_of_(group_assignment(structure)) {}

  /// Followers' subsystem membership for the cross-group influence flag.
  void set_affiliation(std::vector<int> affiliation) { affiliation_ = std::move(affiliation); }

  OpinionState advance(const OpinionState& state, StepRecord* record = nullptr) const {
    check_shape(state);
    const NeighborSets sets =
        compute_neighbors(state.opinions, *structure_, *params_, options_.search, options_.threads);
    DegreeAssignment degrees = schedules_->draw(*structure_, state.t, key_);
    return apply(state, sets, std::move(degrees), record);
  }

  /// One synchronous update with neighbor sets and raw degrees supplied.
  OpinionState apply(const OpinionState& state, const NeighborSets& sets, DegreeAssignment degrees,
                     StepRecord* record = nullptr) const {
    check_shape(state);
    const OpinionMatrix& x = state.opinions;
    OpinionState next{state.t + 1, OpinionMatrix(x.agents(), x.dim())};

    std::size_t zeroed = 0;
    std::size_t reallocated = 0;
    if (params_->mode == Mode::mixed) {
      for (Index i : structure_->followers)
        for (std::size_t k = 0; k < structure_->group_count(); ++k)
          if (sets.leader[i][k].empty() && degrees.beta[i][k] != 0.0) {
            degrees.beta[i][k] = 0.0;
            ++zeroed;
          }
      parallel_for(x.agents(), options_.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t a = begin; a < end; ++a) update_mixed(static_cast<Index>(a), x, sets, degrees, next.opinions);
      });
    } else {
      std::vector<LegacyReallocation> flags(x.agents());
      parallel_for(x.agents(), options_.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t a = begin; a < end; ++a)
          flags[a] = update_legacy(static_cast<Index>(a), x, sets, degrees, next.opinions);
      });
      for (Index i : structure_->followers) {
        for (std::size_t side = 0; side < 2; ++side)
          if (side == 0 ? flags[i].positive : flags[i].negative) {
            degrees.beta[i][side] = 0.0;
            ++reallocated;
          }
      }
    }

    for (std::size_t i = 0; i < x.agents(); ++i)
      if (!all_finite(next.opinions.row(i)))
        throw RuntimeFailure("non-finite opinion for agent " + std::to_string(i) + " at step " +
                             std::to_string(state.t));

    if (record != nullptr) {
      *record = summarize(state, next, sets, degrees);
      record->zeroed_betas = zeroed;
      record->legacy_reallocations = reallocated;
      if (options_.record_degrees) record->degrees = std::move(degrees);
    }
    return next;
  }

 private:
  void check_shape(const OpinionState& state) const {
    if (state.opinions.agents() != structure_->n_agents)
      throw ValidationError("state has " + std::to_string(state.opinions.agents()) +
                            " agents, structure has " + std::to_string(structure_->n_agents));
    if (state.opinions.dim() != structure_->dim())
      throw ValidationError("state dimension " + std::to_string(state.opinions.dim()) +
                            " differs from target dimension " + std::to_string(structure_->dim()));
  }

  void update_mixed(Index i, const OpinionMatrix& x, const NeighborSets& sets,
                    const DegreeAssignment& degrees, OpinionMatrix& out) const {
    const int k = group_of_[i];
    if (k == kFollowerRole) {
      std::vector<decltype(rows_of(x, sets.leader[i][0]))> groups;
      groups.reserve(structure_->group_count());
      for (const auto& ids : sets.leader[i]) groups.push_back(rows_of(x, ids));
      follower_update_into(out.row(i), x.row(i), rows_of(x, sets.follower[i]), groups, degrees.beta[i]);
    } else {
      leader_update_into(out.row(i), x.row(i), rows_of(x, sets.leader[i][k]), degrees.alpha[i],
                         structure_->leader_groups[k].target);
    }
  }

  LegacyReallocation update_legacy(Index i, const OpinionMatrix& x, const NeighborSets& sets,
                                   const DegreeAssignment& degrees, OpinionMatrix& out) const {
    const int k = group_of_[i];
    if (k == kFollowerRole)
      return legacy_follower_update_into(out.row(i), x.row(i), rows_of(x, sets.follower[i]),
                                         rows_of(x, sets.leader[i][0]), rows_of(x, sets.leader[i][1]),
                                         degrees.beta[i][0], degrees.beta[i][1]);
    legacy_leader_update_into(out.row(i), x.row(i), rows_of(x, sets.leader[i][k]), degrees.alpha[i],
                              structure_->leader_groups[k].target);
    return {};
  }

  StepRecord summarize(const OpinionState& before, const OpinionState& after, const NeighborSets& sets,
                       const DegreeAssignment& degrees) const {
    const auto& s = *structure_;
    const Norm norm = params_->norm;
    const std::size_t m = s.group_count();
    StepRecord rec;
    rec.t = before.t;
    rec.max_alpha.assign(m, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      rec.leader_distance.push_back(*leader_distance(after.opinions, s, k, norm));
      for (Index i : s.leader_groups[k].members) {
        const double on_average = params_->mode == Mode::mixed ? degrees.alpha[i] : 1.0 - degrees.alpha[i];
        rec.max_alpha[k] = std::max(rec.max_alpha[k], on_average);
      }
      if (!s.followers.empty())
        rec.follower_distance.push_back(*follower_distance(after.opinions, s, s.leader_groups[k].target, norm));
    }

    const auto targets = s.targets();
    bool limit_defined = true;
    double gap = 0.0;
    for (std::size_t k = 0; k < m; ++k)
      for (Index i : s.leader_groups[k].members)
        gap = std::max(gap, distance(after.opinions.row(i), s.leader_groups[k].target, norm));
    for (Index i : s.followers) {
      double beta_sum = 0.0;
      for (double b : degrees.beta[i]) beta_sum += b;
      const double self_weight = 1.0 - beta_sum;
      rec.max_follower_self_weight = std::max(rec.max_follower_self_weight.value_or(self_weight), self_weight);
      if (params_->mode == Mode::mixed) {
        if (auto limit = predicted_follower_limit(degrees.beta[i], targets))
          gap = std::max(gap, distance(after.opinions.row(i), *limit, norm));
        else
          limit_defined = false;
      } else {
        limit_defined = false;
      }
    }
    if (limit_defined) rec.limit_gap = gap;

    for (std::size_t i = 0; i < before.opinions.agents(); ++i)
      rec.displacement =
          std::max(rec.displacement, distance(after.opinions.row(i), before.opinions.row(i), norm));
    rec.connectivity = connectivity_report(sets, s, affiliation_.empty() ? nullptr : &affiliation_);
    return rec;
  }

  const GroupStructure* structure_;
  const ModelParams* params_;
  const ScheduleSet* schedules_;
  RngKey key_;
  EngineOptions options_;
  std::vector<int> group_of_;
  std::vector<int> affiliation_;
};

/// One synchronous step of the mixed model.
inline OpinionState step(const OpinionState& state, const GroupStructure& structure,
                         const ModelParams& params, const ScheduleSet& schedules, RngKey key,
                         const EngineOptions& options = {}) {
  if (params.mode != Mode::mixed) throw ValidationError("step: params are not in mixed mode");
  return Stepper(structure, params, schedules, key, options).advance(state);
}

/// One synchronous step of the original leader-follower model.
inline OpinionState legacy_step(const OpinionState& state, const GroupStructure& structure,
                                const ModelParams& params, const ScheduleSet& schedules, RngKey key) {
  if (params.mode != Mode::legacy) throw ValidationError("legacy_step: params are not in legacy mode");
  return Stepper(structure, params, schedules, key).advance(state);
}

// ---------------------------------------------------------------------------

enum class TerminalReason { max_steps, displacement_tol, limit_tol };

inline std::string_view to_string(TerminalReason reason) {
  switch (reason) {
    case TerminalReason::max_steps: return "max_steps";
    case TerminalReason::displacement_tol: return "displacement_tol";
    case TerminalReason::limit_tol: return "limit_tol";
  }
  return "?";
}

struct Termination {
  std::uint64_t max_steps{10000};
  std::optional<double> displacement_tol{1e-12};
  std::optional<double> limit_tol;

  bool operator==(const Termination&) const = default;
};

struct Scenario {
  GroupStructure structure;
  ModelParams params;
  std::vector<ScheduleBinding> schedules;
  OpinionState initial;
  RngKey key;
  Termination termination;
  /// Full state kept every `snapshot_stride` steps (plus the final state).
  std::uint64_t snapshot_stride{1};
};

struct Trajectory {
  std::vector<OpinionState> snapshots;
  std::vector<StepRecord> metrics;
  std::vector<double> initial_leader_distance;
  std::vector<double> initial_follower_distance;
  std::vector<int> affiliation;
  TerminalReason terminal{TerminalReason::max_steps};

  std::uint64_t final_t() const { return snapshots.empty() ? 0 : snapshots.back().t; }
  const OpinionState& final_state() const { return snapshots.back(); }
};

/// Throws ValidationError listing every problem with the scenario.
inline ScheduleSet validate_scenario(const Scenario& scenario) {
  std::vector<std::string> problems;
  for (const auto& v : validate_structure(scenario.structure, scenario.params))
    problems.push_back(v.subject + ": " + v.message);
  const auto& x = scenario.initial.opinions;
  if (problems.empty()) {
    if (x.agents() != scenario.structure.n_agents || x.dim() != scenario.structure.dim())
      problems.push_back("initial state shape does not match the group structure");
    else if (!all_finite(x.data()))
      problems.push_back("initial opinions must be finite");
    else if (scenario.params.mode == Mode::legacy)
      for (std::size_t i = 0; i < x.agents(); ++i)
        if (!(x.row(i)[0] >= -1.0 && x.row(i)[0] <= 1.0)) {
          problems.push_back("legacy mode: initial opinion of agent " + std::to_string(i) +
                             " outside [-1, 1]");
          break;
        }
  }
  if (scenario.snapshot_stride == 0) problems.push_back("snapshot_stride must be >= 1");
  for (auto tol : {scenario.termination.displacement_tol, scenario.termination.limit_tol})
    if (tol && !(*tol >= 0.0)) problems.push_back("termination tolerances must be >= 0");
  if (!problems.empty()) throw ValidationError(std::move(problems));
  return ScheduleSet(scenario.structure, scenario.params.mode, scenario.schedules);
}

inline Trajectory run(const Scenario& scenario, const EngineOptions& options = {}) {
  const ScheduleSet schedules = validate_scenario(scenario);
  const auto& s = scenario.structure;
  const Norm norm = scenario.params.norm;

  Trajectory traj;
  traj.affiliation = nearest_target_affiliation(scenario.initial.opinions, s, norm);
  for (std::size_t k = 0; k < s.group_count(); ++k) {
    traj.initial_leader_distance.push_back(*leader_distance(scenario.initial.opinions, s, k, norm));
    if (!s.followers.empty())
      traj.initial_follower_distance.push_back(
          *follower_distance(scenario.initial.opinions, s, s.leader_groups[k].target, norm));
  }

  Stepper stepper(s, scenario.params, schedules, scenario.key, options);
  stepper.set_affiliation(traj.affiliation);

  traj.snapshots.push_back(scenario.initial);
  OpinionState state = scenario.initial;
  const auto& term = scenario.termination;
  for (std::uint64_t executed = 0; executed < term.max_steps; ++executed) {
    StepRecord record;
    state = stepper.advance(state, &record);
    const bool settled = term.displacement_tol && record.displacement < *term.displacement_tol;
    const bool at_limit = term.limit_tol && record.limit_gap && *record.limit_gap < *term.limit_tol;
    traj.metrics.push_back(std::move(record));
    if (state.t % scenario.snapshot_stride == 0) traj.snapshots.push_back(state);
    if (settled) {
      traj.terminal = TerminalReason::displacement_tol;
      break;
    }
    if (at_limit) {
      traj.terminal = TerminalReason::limit_tol;
      break;
    }
  }
  if (traj.snapshots.back().t != state.t) traj.snapshots.push_back(std::move(state));
  return traj;
}

}  // namespace lfdyn
