#pragma once

// Hypothesis checkers and decay-bound verifiers for the convergence results.
// Hypotheses quantified over infinite time are only ever reported as
// holding on the examined window, never outright.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lfdyn/engine.hpp"
#include "lfdyn/metrics.hpp"

namespace lfdyn {

enum class Verdict { verified_on_window, violated, undecidable };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::verified_on_window: return "verified-on-window";
    case Verdict::violated: return "violated";
    case Verdict::undecidable: return "undecidable-at-finite-horizon";
  }
  return "?";
}

struct HypothesisReport {
  std::string theorem;  // "1", "2", "c1", "c2"
  std::string subject;  // leader group name for per-group checks
  Verdict verdict{Verdict::undecidable};
  std::uint64_t window_begin{0};
  std::uint64_t window_end{0};  // exclusive
  std::optional<std::uint64_t> counterexample_step;
  std::map<std::string, double> scalars;
  std::map<std::string, bool> flags;
  std::vector<double> series;  // per-step evidence
  std::string note;
};

/// Per-step degree summaries for one leader group, pulled from a trajectory.
struct DegreeHistory {
  std::uint64_t first_step{0};
  std::vector<double> max_alpha;
  /// per_agent_alpha[s][j]: weight of the j-th member on its group average at
  /// step first_step + s. Empty when the run did not record degrees.
  std::vector<std::vector<double>> per_agent_alpha;
  /// max over followers of 1 - sum_k beta; empty without followers.
  std::vector<double> max_follower_self_weight;
  /// Per step: max over all leader groups of max_alpha.
  std::vector<double> max_alpha_all_groups;
};

inline DegreeHistory degree_history(const Trajectory& traj, const GroupStructure& structure,
                                    std::size_t group, Mode mode = Mode::mixed) {
  DegreeHistory h;
  if (!traj.metrics.empty()) h.first_step = traj.metrics.front().t;
  const auto& members = structure.leader_groups.at(group).members;
  for (const auto& rec : traj.metrics) {
    h.max_alpha.push_back(rec.max_alpha[group]);
    double all = 0.0;
    for (double a : rec.max_alpha) all = std::max(all, a);
    h.max_alpha_all_groups.push_back(all);
    if (rec.max_follower_self_weight) h.max_follower_self_weight.push_back(*rec.max_follower_self_weight);
    if (!rec.degrees.alpha.empty()) {
      std::vector<double> row;
      row.reserve(members.size());
      for (Index i : members)
        row.push_back(mode == Mode::mixed ? rec.degrees.alpha[i] : 1.0 - rec.degrees.alpha[i]);
      h.per_agent_alpha.push_back(std::move(row));
    }
  }
  return h;
}

inline std::vector<double> leader_distance_series(const Trajectory& traj, std::size_t group) {
  std::vector<double> out{traj.initial_leader_distance.at(group)};
  for (const auto& rec : traj.metrics) out.push_back(rec.leader_distance[group]);
  return out;
}

inline std::vector<double> follower_distance_series(const Trajectory& traj, std::size_t group) {
  std::vector<double> out;
  if (traj.initial_follower_distance.empty()) return out;
  out.push_back(traj.initial_follower_distance.at(group));
  for (const auto& rec : traj.metrics) out.push_back(rec.follower_distance[group]);
  return out;
}

/// Earliest step s such that every follower saw all of leader group k at
/// every step from s through the end of the run.
inline std::optional<std::uint64_t> persistent_full_visibility_from(const Trajectory& traj,
                                                                    std::size_t group) {
  std::optional<std::uint64_t> from;
  for (const auto& rec : traj.metrics) {
    if (rec.connectivity.followers_see_whole_group[group]) {
      if (!from) from = rec.t;
    } else {
      from.reset();
    }
  }
  return from;
}

// ---------------------------------------------------------------------------

struct Theorem1Options {
  double delta{0.995};
  /// Minimum fraction of window steps that must satisfy max alpha <= delta.
  double recurrence_quota{0.01};
};

/// Finite-window rendering of limsup_t max_i alpha_i(t) < 1: counts the
/// steps with max_i alpha_i(t) <= delta. With per-agent data it also reports
/// the weaker per-agent recurrence (each agent individually at or below
/// delta often enough).
inline HypothesisReport check_theorem1(const DegreeHistory& history, const Theorem1Options& options = {}) {
  if (history.max_alpha.empty()) throw ValidationError("check_theorem1: empty window");
  if (!(options.delta < 1.0)) throw ValidationError("check_theorem1: delta must be < 1");
  HypothesisReport r;
  r.theorem = "1";
  r.window_begin = history.first_step;
  r.window_end = history.first_step + history.max_alpha.size();
  r.series = history.max_alpha;

  const std::size_t n = history.max_alpha.size();
  std::size_t qualifying = 0;
  for (double a : history.max_alpha)
    if (a <= options.delta) ++qualifying;
  const double density = static_cast<double>(qualifying) / static_cast<double>(n);
  double tail_max = 0.0;
  for (std::size_t s = n / 2; s < n; ++s) tail_max = std::max(tail_max, history.max_alpha[s]);

  r.scalars["delta"] = options.delta;
  r.scalars["recurrence_quota"] = options.recurrence_quota;
  r.scalars["qualifying_steps"] = static_cast<double>(qualifying);
  r.scalars["qualifying_density"] = density;
  r.scalars["tail_max_alpha"] = tail_max;
  const bool group_ok = qualifying >= 1 && density >= options.recurrence_quota;
  r.flags["group_condition_on_window"] = group_ok;
  r.verdict = group_ok ? Verdict::verified_on_window : Verdict::undecidable;

  if (!history.per_agent_alpha.empty()) {
    const std::size_t agents = history.per_agent_alpha.front().size();
    double min_density = 1.0;
    for (std::size_t j = 0; j < agents; ++j) {
      std::size_t hits = 0;
      for (const auto& row : history.per_agent_alpha)
        if (row[j] <= options.delta) ++hits;
      min_density = std::min(min_density, static_cast<double>(hits) / static_cast<double>(n));
    }
    r.scalars["per_agent_min_density"] = min_density;
    r.flags["per_agent_condition_on_window"] = min_density >= options.recurrence_quota && min_density > 0.0;
  }

  if (group_ok)
    r.note = "max alpha <= delta recurs on the window";
  else if (r.flags.count("per_agent_condition_on_window") && r.flags["per_agent_condition_on_window"])
    r.note = "group maximum rarely drops to delta, but every agent individually does";
  else
    r.note = "max alpha <= delta does not recur on the window";
  return r;
}

/// Single leader group with target g: (a) every opinion strictly inside
/// B(g, epsilon) at the window start; (b) sup over the window of
/// max{max_F (1 - beta), max_L alpha} < 1.
inline HypothesisReport check_theorem2(const OpinionState& start, double epsilon, OpinionView target,
                                       Norm norm, const DegreeHistory& history) {
  HypothesisReport r;
  r.theorem = "2";
  r.window_begin = start.t;
  r.window_end = start.t + history.max_alpha.size();

  double radius = 0.0;
  for (std::size_t i = 0; i < start.opinions.agents(); ++i)
    radius = std::max(radius, distance(start.opinions.row(i), target, norm));
  const bool in_ball = radius < epsilon;
  r.scalars["initial_radius"] = radius;
  r.scalars["epsilon"] = epsilon;
  r.flags["inside_open_ball"] = in_ball;

  double sup = 0.0;
  std::optional<std::uint64_t> first_bad;
  for (std::size_t s = 0; s < history.max_alpha.size(); ++s) {
    double v = history.max_alpha[s];
    if (s < history.max_follower_self_weight.size()) v = std::max(v, history.max_follower_self_weight[s]);
    r.series.push_back(v);
    sup = std::max(sup, v);
    if (!(v < 1.0) && !first_bad) first_bad = history.first_step + s;
  }
  r.scalars["sup_degree"] = sup;
  r.flags["degree_bound_on_window"] = !first_bad.has_value();

  if (!in_ball) {
    r.verdict = Verdict::violated;
    r.counterexample_step = start.t;
    r.note = "some opinion is not strictly within epsilon of the target";
  } else if (first_bad) {
    r.verdict = Verdict::violated;
    r.counterexample_step = first_bad;
    r.note = "a degree reached 1 inside the window";
  } else {
    r.verdict = Verdict::verified_on_window;
  }
  return r;
}

/// All opinions and all targets strictly inside B(g_j, epsilon) for some j,
/// and the same degree bound as the single-group consensus result, taken
/// over every leader group.
inline HypothesisReport check_corollary1(const OpinionState& start, const GroupStructure& structure,
                                         double epsilon, Norm norm, const DegreeHistory& history) {
  HypothesisReport r;
  r.theorem = "c1";
  r.window_begin = start.t;
  r.window_end = start.t + history.max_alpha_all_groups.size();

  std::optional<std::size_t> center;
  double best_radius = 0.0;
  for (std::size_t j = 0; j < structure.group_count(); ++j) {
    const auto& gj = structure.leader_groups[j].target;
    double radius = 0.0;
    for (std::size_t i = 0; i < start.opinions.agents(); ++i)
      radius = std::max(radius, distance(start.opinions.row(i), gj, norm));
    for (const auto& other : structure.leader_groups) radius = std::max(radius, distance(other.target, gj, norm));
    if (!center || radius < best_radius) {
      best_radius = radius;
      center = j;
    }
  }
  const bool in_ball = center && best_radius < epsilon;
  r.scalars["best_center_group"] = center ? static_cast<double>(*center) : -1.0;
  r.scalars["best_radius"] = best_radius;
  r.flags["inside_open_ball"] = in_ball;

  double sup = 0.0;
  std::optional<std::uint64_t> first_bad;
  for (std::size_t s = 0; s < history.max_alpha_all_groups.size(); ++s) {
    double v = history.max_alpha_all_groups[s];
    if (s < history.max_follower_self_weight.size()) v = std::max(v, history.max_follower_self_weight[s]);
    r.series.push_back(v);
    sup = std::max(sup, v);
    if (!(v < 1.0) && !first_bad) first_bad = history.first_step + s;
  }
  r.scalars["sup_degree"] = sup;
  r.flags["degree_bound_on_window"] = !first_bad.has_value();

  if (!in_ball) {
    r.verdict = Verdict::violated;
    r.counterexample_step = start.t;
    r.note = "no target ball of radius epsilon contains every opinion and every target";
  } else if (first_bad) {
    r.verdict = Verdict::violated;
    r.counterexample_step = first_bad;
    r.note = "a degree reached 1 inside the window";
  } else {
    r.verdict = Verdict::verified_on_window;
  }
  return r;
}

/// Minimum pairwise target distance; +inf with fewer than two targets.
inline double min_target_separation(const GroupStructure& structure, Norm norm) {
  double best = std::numeric_limits<double>::infinity();
  const auto& g = structure.leader_groups;
  for (std::size_t a = 0; a < g.size(); ++a)
    for (std::size_t b = a + 1; b < g.size(); ++b) best = std::min(best, distance(g[a].target, g[b].target, norm));
  return best;
}

inline bool targets_separated(const GroupStructure& structure, double epsilon, Norm norm) {
  return min_target_separation(structure, norm) > 3.0 * epsilon;
}

/// Separated-subsystems setting: targets pairwise more than 3 epsilon apart,
/// each leader group inside its own target ball, each follower inside some
/// target ball; then no cross-subsystem interaction may appear in the run.
inline HypothesisReport check_corollary2_separation(const GroupStructure& structure, double epsilon,
                                                    Norm norm, const Trajectory& traj) {
  if (structure.group_count() < 2) throw ValidationError("check_corollary2_separation: needs m >= 2");
  HypothesisReport r;
  r.theorem = "c2";
  const OpinionState& start = traj.snapshots.front();
  r.window_begin = start.t;
  r.window_end = start.t + traj.metrics.size();

  const double separation = min_target_separation(structure, norm);
  const bool separated = separation > 3.0 * epsilon;
  bool leaders_inside = true;
  for (const auto& group : structure.leader_groups)
    for (Index i : group.members)
      if (!(distance(start.opinions.row(i), group.target, norm) < epsilon)) leaders_inside = false;
  bool followers_inside = true;
  for (Index i : structure.followers) {
    bool any = false;
    for (const auto& group : structure.leader_groups)
      if (distance(start.opinions.row(i), group.target, norm) < epsilon) any = true;
    if (!any) followers_inside = false;
  }
  std::optional<std::uint64_t> first_cross;
  double sup = 0.0;
  for (const auto& rec : traj.metrics) {
    if (rec.connectivity.cross_group_influence && !first_cross) first_cross = rec.t;
    double v = 0.0;
    for (double a : rec.max_alpha) v = std::max(v, a);
    if (rec.max_follower_self_weight) v = std::max(v, *rec.max_follower_self_weight);
    sup = std::max(sup, v);
    r.series.push_back(rec.connectivity.cross_group_influence ? 1.0 : 0.0);
  }

  r.scalars["min_target_separation"] = separation;
  r.scalars["required_separation"] = 3.0 * epsilon;
  r.scalars["sup_degree"] = sup;
  r.flags["targets_separated"] = separated;
  r.flags["leaders_in_own_ball"] = leaders_inside;
  r.flags["followers_in_some_ball"] = followers_inside;
  r.flags["degree_bound_on_window"] = sup < 1.0;
  r.flags["no_cross_interaction"] = !first_cross.has_value();

  if (!separated || !leaders_inside || !followers_inside) {
    r.verdict = Verdict::violated;
    r.counterexample_step = start.t;
    r.note = "initial separation conditions fail";
  } else if (first_cross) {
    r.verdict = Verdict::violated;
    r.counterexample_step = first_cross;
    r.note = "cross-subsystem interaction observed";
  } else {
    r.verdict = Verdict::verified_on_window;
  }
  return r;
}

struct GeometricBoundResult {
  bool precondition_holds{true};  // max alpha <= delta at every step
  bool bound_holds{true};
  std::optional<std::uint64_t> first_violation;
  double worst_excess{-std::numeric_limits<double>::infinity()};
};

/// C_t <= delta^t C_0 + slack along an isolated leader group's run.
inline GeometricBoundResult geometric_bound_check(const Trajectory& traj, std::size_t group, double delta,
                                                  double slack = 1e-12) {
  GeometricBoundResult out;
  const auto series = leader_distance_series(traj, group);
  double bound = series.front();
  for (std::size_t s = 0; s < traj.metrics.size(); ++s) {
    if (traj.metrics[s].max_alpha[group] > delta) out.precondition_holds = false;
    bound *= delta;
    const double excess = series[s + 1] - bound;
    out.worst_excess = std::max(out.worst_excess, excess);
    if (excess > slack && out.bound_holds) {
      out.bound_holds = false;
      out.first_violation = traj.metrics[s].t + 1;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

inline constexpr std::array<std::string_view, 4> kTheoremIds{"1", "2", "c1", "c2"};

/// Reports for the checks that apply to the scenario's shape: "1" per leader
/// group, "2" with a single leader group, "c1" with followers and "c2" with
/// two or more groups. Naming a theorem that does not apply is an error.
inline std::vector<HypothesisReport> hypothesis_reports(const Scenario& scenario, const Trajectory& traj,
                                                        std::optional<std::string_view> only = std::nullopt,
                                                        const Theorem1Options& t1 = {}) {
  const auto& s = scenario.structure;
  const auto& p = scenario.params;
  const std::size_t m = s.group_count();
  const bool mixed = p.mode == Mode::mixed;
  auto wanted = [&](std::string_view id) { return !only || *only == id; };
  if (only && std::find(kTheoremIds.begin(), kTheoremIds.end(), *only) == kTheoremIds.end())
    throw ValidationError("unknown theorem '" + std::string(*only) + "' (use 1, 2, c1 or c2)");

  std::vector<HypothesisReport> out;
  if (traj.metrics.empty()) {
    if (only) throw ValidationError("no steps were run; nothing to check");
    return out;
  }
  const OpinionState& start = traj.snapshots.front();
  if (wanted("1"))
    for (std::size_t k = 0; k < m; ++k) {
      auto r = check_theorem1(degree_history(traj, s, k, p.mode), t1);
      r.subject = s.leader_groups[k].name;
      out.push_back(std::move(r));
    }
  if (wanted("2")) {
    if (m == 1 && mixed)
      out.push_back(check_theorem2(start, p.epsilon, s.leader_groups[0].target, p.norm, degree_history(traj, s, 0)));
    else if (only)
      throw ValidationError("check 2 needs mixed mode with exactly one leader group");
  }
  if (wanted("c1")) {
    if (!s.followers.empty() && mixed)
      out.push_back(check_corollary1(start, s, p.epsilon, p.norm, degree_history(traj, s, 0)));
    else if (only)
      throw ValidationError("check c1 needs mixed mode with followers");
  }
  if (wanted("c2")) {
    if (m >= 2 && mixed)
      out.push_back(check_corollary2_separation(s, p.epsilon, p.norm, traj));
    else if (only)
      throw ValidationError("check c2 needs mixed mode with two or more leader groups");
  }
  return out;
}

}  // namespace lfdyn
