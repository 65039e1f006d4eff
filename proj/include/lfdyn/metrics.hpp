#pragma once

#include <optional>
#include <span>
#include <vector>

#include "lfdyn/model.hpp"
#include "lfdyn/opinion.hpp"

namespace lfdyn {

inline std::optional<double> max_distance_to(const OpinionMatrix& x, const std::vector<Index>& ids,
                                             OpinionView point, Norm norm) {
  if (ids.empty()) return std::nullopt;
  double worst = 0.0;
  for (Index i : ids) worst = std::max(worst, distance(x.row(i), point, norm));
  return worst;
}

/// C_t: max over members of leader group k of ||x_i - g_k||.
inline std::optional<double> leader_distance(const OpinionMatrix& x, const GroupStructure& structure,
                                             std::size_t group, Norm norm) {
  const auto& g = structure.leader_groups.at(group);
  return max_distance_to(x, g.members, g.target, norm);
}

/// A_t: max over followers of ||x_i - target||.
inline std::optional<double> follower_distance(const OpinionMatrix& x, const GroupStructure& structure,
                                               OpinionView target, Norm norm) {
  return max_distance_to(x, structure.followers, target, norm);
}

/// sum_k beta_k g_k / sum_j beta_j. Empty when every beta is zero (the
/// follower is decoupled from all leaders and has no target-determined limit).
inline std::optional<Opinion> predicted_follower_limit(std::span<const double> beta,
                                                       std::span<const Opinion> targets) {
  if (beta.size() != targets.size() || targets.empty()) return std::nullopt;
  double total = 0.0;
  for (double b : beta) total += b;
  if (!(total > 0.0)) return std::nullopt;
  Opinion out(targets.front().size(), 0.0);
  for (std::size_t k = 0; k < beta.size(); ++k)
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += beta[k] * targets[k][c];
  for (double& v : out) v /= total;
  return out;
}

}  // namespace lfdyn
