#pragma once

// Group structure, parameters, and the per-agent update rules of the mixed
// leader-follower model and of the original (legacy) leader-follower model.

#include <concepts>
#include <cstddef>
#include <limits>
#include <ranges>
#include <string>
#include <vector>

#include "lfdyn/errors.hpp"
#include "lfdyn/opinion.hpp"

namespace lfdyn {

struct LeaderGroup {
  std::string name;
  std::vector<Index> members;  // strictly ascending
  Opinion target;

  bool operator==(const LeaderGroup&) const = default;
};

/// Partition of agents 0..n_agents-1 into a follower set and m leader groups.
struct GroupStructure {
  std::size_t n_agents{0};
  std::vector<Index> followers;  // strictly ascending, may be empty
  std::vector<LeaderGroup> leader_groups;

  std::size_t group_count() const noexcept { return leader_groups.size(); }
  std::size_t dim() const noexcept {
    return leader_groups.empty() ? 0 : leader_groups.front().target.size();
  }
  std::vector<Opinion> targets() const {
    std::vector<Opinion> out;
    out.reserve(leader_groups.size());
    for (const auto& group : leader_groups) out.push_back(group.target);
    return out;
  }

  bool operator==(const GroupStructure&) const = default;
};

enum class Mode { mixed, legacy };

inline std::string_view to_string(Mode mode) { return mode == Mode::mixed ? "mixed" : "legacy"; }

struct ModelParams {
  double epsilon{0.0};
  Norm norm{Norm::euclidean};
  Mode mode{Mode::mixed};
  /// Legacy mode only: one confidence threshold per agent.
  std::vector<double> agent_epsilon;

  double threshold_of(Index agent) const {
    return mode == Mode::legacy ? agent_epsilon[agent] : epsilon;
  }

  bool operator==(const ModelParams&) const = default;
};

/// Degrees in effect for one step, indexed by agent.
///
/// Mixed mode: alpha[i] is a leader's weight on its group-neighbor average;
/// beta[i][k] is a follower's weight on leader group k's neighbor average.
/// Legacy mode: alpha[i] is a leader's weight on its target (w_i or z_i);
/// beta[i] = {weight on positive-target neighbors, weight on negative-target
/// neighbors}. Entries for agents of the other role are unused.
struct DegreeAssignment {
  std::vector<double> alpha;
  std::vector<std::vector<double>> beta;

  bool operator==(const DegreeAssignment&) const = default;
};

/// Follower coefficient sums may exceed 1 by this much before being rejected.
inline constexpr double kWeightSumSlack = 1e-12;

inline constexpr int kFollowerRole = -1;

/// group_of[i] is the leader group index of agent i, or kFollowerRole.
/// Assumes a structure that passed validate_structure.
inline std::vector<int> group_assignment(const GroupStructure& structure) {
  std::vector<int> group_of(structure.n_agents, kFollowerRole);
  for (std::size_t k = 0; k < structure.leader_groups.size(); ++k)
    for (Index i : structure.leader_groups[k].members) group_of[i] = static_cast<int>(k);
  return group_of;
}

struct Violation {
  std::string rule;
  std::string subject;
  std::string message;

  bool operator==(const Violation&) const = default;
};

inline std::vector<Violation> validate_structure(const GroupStructure& structure,
                                                 const ModelParams& params) {
  std::vector<Violation> out;
  auto add = [&](std::string rule, std::string subject, std::string message) {
    out.push_back({std::move(rule), std::move(subject), std::move(message)});
  };

  const std::size_t n = structure.n_agents;
  std::vector<int> owner(n, -2);  // -2 unassigned, -1 follower, k leader group
  auto claim = [&](Index agent, int who, const std::string& where) {
    if (agent >= n) {
      add("index-range", where,
          "agent " + std::to_string(agent) + " outside [0, " + std::to_string(n) + ")");
      return;
    }
    if (owner[agent] != -2) {
      const std::string first =
          owner[agent] == -1 ? std::string("followers")
                             : "leader group " + structure.leader_groups[owner[agent]].name;
      add("overlap", "agent " + std::to_string(agent),
          "agent " + std::to_string(agent) + " belongs to both " + first + " and " + where);
      return;
    }
    owner[agent] = who;
  };
  auto check_sorted = [&](const std::vector<Index>& ids, const std::string& where) {
    for (std::size_t p = 1; p < ids.size(); ++p)
      if (ids[p - 1] >= ids[p]) {
        add("ordering", where, where + " members must be strictly ascending");
        return;
      }
  };

  check_sorted(structure.followers, "followers");
  for (Index i : structure.followers) claim(i, -1, "followers");

  if (structure.leader_groups.empty()) add("group-count", "leader groups", "need at least one leader group");

  const std::size_t d = structure.dim();
  if (!structure.leader_groups.empty() && d == 0)
    add("dimension", "leader group " + structure.leader_groups.front().name,
        "target must have dimension >= 1");
  for (std::size_t k = 0; k < structure.leader_groups.size(); ++k) {
    const auto& group = structure.leader_groups[k];
    const std::string where = "leader group " + group.name;
    if (group.members.empty()) add("empty-group", where, where + " has no members");
    check_sorted(group.members, where);
    for (Index i : group.members) claim(i, static_cast<int>(k), where);
    if (group.target.size() != d)
      add("dimension", where,
          "target has dimension " + std::to_string(group.target.size()) + ", expected " +
              std::to_string(d));
    if (!all_finite(group.target)) add("finite", where, "target must be finite");
  }
  for (std::size_t i = 0; i < n; ++i)
    if (owner[i] == -2)
      add("coverage", "agent " + std::to_string(i),
          "agent " + std::to_string(i) + " is in no group");

  if (!(params.epsilon >= 0.0))
    add("epsilon", "epsilon", "epsilon must be >= 0 (got " + std::to_string(params.epsilon) + ")");

  if (params.mode == Mode::legacy) {
    if (d != 1)
      add("legacy-dimension", "mode",
          "legacy mode requires dimension 1 (got " + std::to_string(d) + ")");
    if (structure.leader_groups.size() != 2)
      add("legacy-groups", "mode",
          "legacy mode requires exactly 2 leader groups (got " +
              std::to_string(structure.leader_groups.size()) + ")");
    if (params.agent_epsilon.size() != n) {
      add("legacy-thresholds", "epsilon",
          "legacy mode requires one threshold per agent (got " +
              std::to_string(params.agent_epsilon.size()) + ")");
    } else {
      for (std::size_t i = 0; i < n; ++i)
        if (!(params.agent_epsilon[i] >= 0.0))
          add("epsilon", "agent " + std::to_string(i), "per-agent epsilon must be >= 0");
    }
    if (structure.leader_groups.size() == 2 && d == 1) {
      const double pos = structure.leader_groups[0].target[0];
      const double neg = structure.leader_groups[1].target[0];
      if (!(pos >= 0.0 && pos <= 1.0))
        add("legacy-target", "leader group " + structure.leader_groups[0].name,
            "positive target must lie in [0, 1]");
      if (!(neg >= -1.0 && neg <= 0.0))
        add("legacy-target", "leader group " + structure.leader_groups[1].name,
            "negative target must lie in [-1, 0]");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Update rules. Neighbor lists are ranges of opinion rows given in ascending
// agent order; each mean is a sequential sum followed by one division.

template <class R>
concept OpinionRows = std::ranges::input_range<R> &&
                      std::convertible_to<std::ranges::range_reference_t<R>, OpinionView>;

template <class R>
concept OpinionRowGroups =
    std::ranges::input_range<R> && OpinionRows<std::ranges::range_reference_t<R>>;

namespace detail {

template <OpinionRows Rows>
std::size_t mean_into(const Rows& rows, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  std::size_t count = 0;
  for (OpinionView row : rows) {
    if (row.size() != out.size()) throw ValidationError("opinion dimension mismatch");
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += row[c];
    ++count;
  }
  if (count != 0)
    for (double& v : out) v /= static_cast<double>(count);
  return count;
}

inline void check_unit_weight(double w, const char* what) {
  if (!(w >= 0.0 && w <= 1.0))
    throw ValidationError(std::string(what) + " must lie in [0, 1] (got " + std::to_string(w) +
                          ")");
}

}  // namespace detail

template <OpinionRows Rows>
void leader_update_into(std::span<double> out, OpinionView self, const Rows& group_neighbors,
                        double alpha, OpinionView target) {
  if (target.size() != self.size() || out.size() != self.size())
    throw ValidationError("opinion dimension mismatch");
  detail::check_unit_weight(alpha, "alpha");
  if (detail::mean_into(group_neighbors, out) == 0)
    throw ContractViolation("leader_update: empty neighbor list");
  const double toward_target = 1.0 - alpha;
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = alpha * out[c] + toward_target * target[c];
}

/// alpha * mean(group neighbors) + (1 - alpha) * target.
template <OpinionRows Rows>
Opinion leader_update(OpinionView self, const Rows& group_neighbors, double alpha,
                      OpinionView target) {
  Opinion out(self.size());
  leader_update_into(out, self, group_neighbors, alpha, target);
  return out;
}

/// Terms with beta_k == 0 are skipped entirely, so a zero weight never
/// touches the (possibly empty) neighbor list of that group.
template <OpinionRows FRows, OpinionRowGroups LGroups>
void follower_update_into(std::span<double> out, OpinionView self, const FRows& follower_neighbors,
                          const LGroups& leader_neighbors, std::span<const double> beta) {
  if (out.size() != self.size()) throw ValidationError("opinion dimension mismatch");
  if (static_cast<std::size_t>(std::ranges::distance(leader_neighbors)) != beta.size())
    throw ValidationError("beta has " + std::to_string(beta.size()) +
                          " entries but there are " +
                          std::to_string(std::ranges::distance(leader_neighbors)) +
                          " leader groups");
  double beta_sum = 0.0;
  for (double b : beta) {
    detail::check_unit_weight(b, "beta");
    beta_sum += b;
  }
  if (beta_sum > 1.0 + kWeightSumSlack)
    throw ValidationError("sum of beta must be <= 1 (got " + std::to_string(beta_sum) + ")");

  if (detail::mean_into(follower_neighbors, out) == 0)
    throw ContractViolation("follower_update: empty follower neighbor list");
  const double self_weight = 1.0 - beta_sum;
  for (double& v : out) v *= self_weight;

  Opinion group_mean(self.size());
  std::size_t k = 0;
  for (const auto& group : leader_neighbors) {
    const double b = beta[k++];
    if (b == 0.0) continue;
    if (detail::mean_into(group, group_mean) == 0)
      throw ContractViolation("follower_update: beta > 0 for a leader group with no neighbors");
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += b * group_mean[c];
  }
}

/// (1 - sum_k beta_k) * mean(follower neighbors) + sum_k beta_k * mean(leader neighbors of k).
template <OpinionRows FRows, OpinionRowGroups LGroups>
Opinion follower_update(OpinionView self, const FRows& follower_neighbors,
                        const LGroups& leader_neighbors, std::span<const double> beta) {
  Opinion out(self.size());
  follower_update_into(out, self, follower_neighbors, leader_neighbors, beta);
  return out;
}

// ---------------------------------------------------------------------------
// Legacy model: one dimension, a positive-target and a negative-target group.

/// (1 - weight) * mean(group neighbors) + weight * target. Serves both the
/// positive-target (w_i, d) and negative-target (z_i, g) equations.
template <OpinionRows Rows>
void legacy_leader_update_into(std::span<double> out, OpinionView self, const Rows& group_neighbors,
                               double weight, OpinionView target) {
  if (target.size() != self.size() || out.size() != self.size())
    throw ValidationError("opinion dimension mismatch");
  detail::check_unit_weight(weight, "target weight");
  if (detail::mean_into(group_neighbors, out) == 0)
    throw ContractViolation("legacy_leader_update: empty neighbor list");
  const double toward_mean = 1.0 - weight;
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = toward_mean * out[c] + weight * target[c];
}

template <OpinionRows Rows>
Opinion legacy_leader_update(OpinionView self, const Rows& group_neighbors, double weight,
                             OpinionView target) {
  Opinion out(self.size());
  legacy_leader_update_into(out, self, group_neighbors, weight, target);
  return out;
}

struct LegacyReallocation {
  bool positive{false};  // alpha mass moved to the follower term
  bool negative{false};  // beta mass moved to the follower term
};

/// (1 - a - b) * mean(N^F) + a * mean(N^P) + b * mean(N^N). A weight whose
/// neighbor class is empty is moved onto the follower-average term.
template <OpinionRows FRows, OpinionRows PRows, OpinionRows NRows>
LegacyReallocation legacy_follower_update_into(std::span<double> out, OpinionView self,
                                               const FRows& follower_neighbors,
                                               const PRows& positive_neighbors,
                                               const NRows& negative_neighbors, double alpha,
                                               double beta) {
  if (out.size() != self.size()) throw ValidationError("opinion dimension mismatch");
  detail::check_unit_weight(alpha, "alpha");
  detail::check_unit_weight(beta, "beta");
  if (alpha + beta > 1.0 + kWeightSumSlack)
    throw ValidationError("alpha + beta must be <= 1");

  Opinion positive_mean(self.size());
  Opinion negative_mean(self.size());
  LegacyReallocation flags;
  double a = alpha;
  double b = beta;
  if (detail::mean_into(positive_neighbors, positive_mean) == 0 && a != 0.0) {
    a = 0.0;
    flags.positive = true;
  }
  if (detail::mean_into(negative_neighbors, negative_mean) == 0 && b != 0.0) {
    b = 0.0;
    flags.negative = true;
  }
  if (detail::mean_into(follower_neighbors, out) == 0)
    throw ContractViolation("legacy_follower_update: empty follower neighbor list");
  const double self_weight = 1.0 - a - b;
  for (std::size_t c = 0; c < out.size(); ++c) {
    double v = self_weight * out[c];
    if (a != 0.0) v += a * positive_mean[c];
    if (b != 0.0) v += b * negative_mean[c];
    out[c] = v;
  }
  return flags;
}

template <OpinionRows FRows, OpinionRows PRows, OpinionRows NRows>
Opinion legacy_follower_update(OpinionView self, const FRows& follower_neighbors,
                               const PRows& positive_neighbors, const NRows& negative_neighbors,
                               double alpha, double beta) {
  Opinion out(self.size());
  legacy_follower_update_into(out, self, follower_neighbors, positive_neighbors,
                              negative_neighbors, alpha, beta);
  return out;
}

/// Lazily maps agent indices to rows of an opinion matrix.
struct RowOf {
  const OpinionMatrix* matrix;
  OpinionView operator()(Index i) const { return matrix->row(i); }
};

inline auto rows_of(const OpinionMatrix& matrix, const std::vector<Index>& ids) {
  return ids | std::views::transform(RowOf{&matrix});
}

}  // namespace lfdyn
