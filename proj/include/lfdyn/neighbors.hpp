#pragma once

// Epsilon-neighbor sets within each group. The grid path buckets every group
// into cells of width epsilon and verifies candidates with the exact same
// distance test as the naive path, so both return identical sets.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "lfdyn/model.hpp"
#include "lfdyn/opinion.hpp"
#include "lfdyn/parallel.hpp"

namespace lfdyn {

/// follower[i]: N_i^F (filled for followers only).
/// leader[i][k]: N_i^{L_k}; for a leader of group k only entry k is filled.
struct NeighborSets {
  std::vector<std::vector<Index>> follower;
  std::vector<std::vector<std::vector<Index>>> leader;

  bool operator==(const NeighborSets&) const = default;
};

enum class NeighborSearch { automatic, naive, grid };

inline constexpr std::size_t kMaxGridDim = 6;

namespace detail {

inline void shape_sets(NeighborSets& sets, const GroupStructure& structure) {
  const std::size_t n = structure.n_agents;
  const std::size_t m = structure.group_count();
  sets.follower.assign(n, {});
  sets.leader.assign(n, std::vector<std::vector<Index>>(m));
}

template <class Threshold>
void scan_members(const OpinionMatrix& x, Index agent, const std::vector<Index>& members,
                  Threshold eps, Norm norm, std::vector<Index>& out) {
  const OpinionView xi = x.row(agent);
  for (Index j : members)
    if (distance(xi, x.row(j), norm) <= eps) out.push_back(j);
}

/// Fills the sets of one agent given a per-group search callback.
template <class Search>
void fill_agent(NeighborSets& sets, const GroupStructure& structure,
                const std::vector<int>& group_of, Index i, Search&& search) {
  const int own = group_of[i];
  if (own == kFollowerRole) {
    search(i, structure.followers, -1, sets.follower[i]);
    for (std::size_t k = 0; k < structure.group_count(); ++k)
      search(i, structure.leader_groups[k].members, static_cast<int>(k), sets.leader[i][k]);
  } else {
    search(i, structure.leader_groups[own].members, own, sets.leader[i][own]);
  }
}

}  // namespace detail

/// O(N^2 d) reference: every within-group pair is compared with `<=`.
inline NeighborSets neighbors_naive(const OpinionMatrix& x, const GroupStructure& structure,
                                    double epsilon, Norm norm) {
  NeighborSets sets;
  detail::shape_sets(sets, structure);
  const auto group_of = group_assignment(structure);
  for (Index i = 0; i < structure.n_agents; ++i)
    detail::fill_agent(sets, structure, group_of, i,
                       [&](Index a, const std::vector<Index>& members, int, std::vector<Index>& out) {
                         detail::scan_members(x, a, members, epsilon, norm, out);
                       });
  return sets;
}

/// Per-agent thresholds (legacy model): j is in N_i when ||x_i - x_j|| <= eps_i.
/// The relation is not symmetric.
inline NeighborSets neighbors_naive(const OpinionMatrix& x, const GroupStructure& structure,
                                    std::span<const double> agent_epsilon, Norm norm) {
  NeighborSets sets;
  detail::shape_sets(sets, structure);
  const auto group_of = group_assignment(structure);
  for (Index i = 0; i < structure.n_agents; ++i)
    detail::fill_agent(sets, structure, group_of, i,
                       [&](Index a, const std::vector<Index>& members, int, std::vector<Index>& out) {
                         detail::scan_members(x, a, members, agent_epsilon[a], norm, out);
                       });
  return sets;
}

/// Uniform grid over the members of one group, cell width epsilon.
class CellGrid {
 public:
  using CellKey = std::array<std::int64_t, kMaxGridDim>;

  CellGrid(const OpinionMatrix& x, const std::vector<Index>& members, double epsilon)
      : x_(&x), epsilon_(epsilon), dim_(x.dim()) {
    std::vector<std::pair<CellKey, Index>> keyed;
    keyed.reserve(members.size());
    for (Index j : members) keyed.emplace_back(cell_of(x.row(j)), j);
    std::sort(keyed.begin(), keyed.end());
    sorted_.reserve(keyed.size());
    for (std::size_t p = 0; p < keyed.size(); ++p) {
      if (p == 0 || keyed[p].first != keyed[p - 1].first)
        cells_.emplace(keyed[p].first, Range{static_cast<Index>(p), static_cast<Index>(p)});
      sorted_.push_back(keyed[p].second);
      ++cells_[keyed[p].first].end;
    }
  }

  /// Coordinates whose cell index cannot be represented exactly.
  static bool representable(const OpinionMatrix& x, double epsilon) {
    constexpr double kLimit = 4503599627370496.0;  // 2^52
    for (double v : x.data())
      if (!std::isfinite(v) || !(std::abs(v) / epsilon < kLimit)) return false;
    return true;
  }

  /// Appends every member within epsilon of `query`, ascending.
  void query(OpinionView query, Norm norm, std::vector<Index>& out) const {
    // The search box is widened by a relative margin far above rounding
    // error, so boundary ties are never lost to floor() of a rounded quotient.
    CellKey lo{};
    CellKey hi{};
    for (std::size_t c = 0; c < dim_; ++c) {
      const double margin = 1e-9 * (std::abs(query[c]) + epsilon_);
      lo[c] = static_cast<std::int64_t>(std::floor((query[c] - epsilon_ - margin) / epsilon_));
      hi[c] = static_cast<std::int64_t>(std::floor((query[c] + epsilon_ + margin) / epsilon_));
    }
    const std::size_t first = out.size();
    CellKey cursor = lo;
    while (true) {
      if (auto it = cells_.find(cursor); it != cells_.end())
        for (Index p = it->second.begin; p < it->second.end; ++p) {
          const Index j = sorted_[p];
          if (distance(query, x_->row(j), norm) <= epsilon_) out.push_back(j);
        }
      std::size_t c = 0;
      for (; c < dim_; ++c) {
        if (cursor[c] < hi[c]) {
          ++cursor[c];
          break;
        }
        cursor[c] = lo[c];
      }
      if (c == dim_) break;
    }
    std::sort(out.begin() + static_cast<std::ptrdiff_t>(first), out.end());
  }

 private:
  struct Range {
    Index begin;
    Index end;
  };
  struct KeyHash {
    std::size_t operator()(const CellKey& key) const noexcept {
      std::uint64_t h = 0x9E3779B97F4A7C15ull;
      for (std::int64_t v : key) {
        std::uint64_t z = static_cast<std::uint64_t>(v) + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        h ^= z ^ (z >> 31);
      }
      return static_cast<std::size_t>(h);
    }
  };

  CellKey cell_of(OpinionView p) const {
    CellKey key{};
    for (std::size_t c = 0; c < dim_; ++c)
      key[c] = static_cast<std::int64_t>(std::floor(p[c] / epsilon_));
    return key;
  }

  const OpinionMatrix* x_;
  double epsilon_;
  std::size_t dim_;
  std::vector<Index> sorted_;
  std::unordered_map<CellKey, Range, KeyHash> cells_;
};

inline bool grid_applicable(const OpinionMatrix& x, double epsilon) {
  return epsilon > 0.0 && std::isfinite(epsilon) && x.dim() >= 1 && x.dim() <= kMaxGridDim &&
         CellGrid::representable(x, epsilon);
}

/// Same sets as neighbors_naive. Falls back to the naive scan when a grid
/// does not apply (epsilon == 0, d > 6, coordinates too large for the cells).
inline NeighborSets neighbors_grid(const OpinionMatrix& x, const GroupStructure& structure,
                                   double epsilon, Norm norm, unsigned threads = 1) {
  if (!grid_applicable(x, epsilon)) return neighbors_naive(x, structure, epsilon, norm);

  const CellGrid follower_grid(x, structure.followers, epsilon);
  std::vector<CellGrid> leader_grids;
  leader_grids.reserve(structure.group_count());
  for (const auto& group : structure.leader_groups) leader_grids.emplace_back(x, group.members, epsilon);

  NeighborSets sets;
  detail::shape_sets(sets, structure);
  const auto group_of = group_assignment(structure);
  parallel_for(structure.n_agents, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
      detail::fill_agent(sets, structure, group_of, static_cast<Index>(i),
                         [&](Index a, const std::vector<Index>&, int group, std::vector<Index>& out) {
                           const CellGrid& grid = group < 0 ? follower_grid : leader_grids[group];
                           grid.query(x.row(a), norm, out);
                         });
  });
  return sets;
}

inline NeighborSets compute_neighbors(const OpinionMatrix& x, const GroupStructure& structure,
                                      const ModelParams& params, NeighborSearch search,
                                      unsigned threads = 1) {
  if (params.mode == Mode::legacy)
    return neighbors_naive(x, structure, params.agent_epsilon, params.norm);
  if (search == NeighborSearch::naive) return neighbors_naive(x, structure, params.epsilon, params.norm);
  return neighbors_grid(x, structure, params.epsilon, params.norm, threads);
}

// ---------------------------------------------------------------------------

struct ConnectivityReport {
  /// Some follower has a nonempty N^{L_k}.
  std::vector<bool> followers_see_group;
  /// Every follower has N^{L_k} == L_k (vacuously true without followers).
  std::vector<bool> followers_see_whole_group;
  /// Some follower interacts outside its own subsystem.
  bool cross_group_influence{false};

  bool operator==(const ConnectivityReport&) const = default;
};

/// Assigns each follower to the leader group with the nearest target
/// (lowest index on ties). Leaders map to their own group.
inline std::vector<int> nearest_target_affiliation(const OpinionMatrix& x,
                                                   const GroupStructure& structure, Norm norm) {
  std::vector<int> out = group_assignment(structure);
  for (Index i : structure.followers) {
    double best = 0.0;
    for (std::size_t k = 0; k < structure.group_count(); ++k) {
      const double d = distance(x.row(i), structure.leader_groups[k].target, norm);
      if (k == 0 || d < best) {
        best = d;
        out[i] = static_cast<int>(k);
      }
    }
  }
  return out;
}

/// Without an affiliation, cross-group influence means a follower sees two
/// or more leader groups at once. With one, it means a follower sees a
/// leader group or a follower belonging to another subsystem.
inline ConnectivityReport connectivity_report(const NeighborSets& sets, const GroupStructure& structure,
                                              const std::vector<int>* affiliation = nullptr) {
  const std::size_t m = structure.group_count();
  ConnectivityReport report;
  report.followers_see_group.assign(m, false);
  report.followers_see_whole_group.assign(m, true);
  for (Index i : structure.followers) {
    std::size_t groups_seen = 0;
    for (std::size_t k = 0; k < m; ++k) {
      const auto& seen = sets.leader[i][k];
      if (!seen.empty()) {
        report.followers_see_group[k] = true;
        ++groups_seen;
        if (affiliation != nullptr && (*affiliation)[i] != static_cast<int>(k))
          report.cross_group_influence = true;
      }
      if (seen.size() != structure.leader_groups[k].members.size())
        report.followers_see_whole_group[k] = false;
    }
    if (affiliation == nullptr) {
      if (groups_seen >= 2) report.cross_group_influence = true;
    } else {
      for (Index j : sets.follower[i])
        if ((*affiliation)[j] != (*affiliation)[i]) report.cross_group_influence = true;
    }
  }
  return report;
}

}  // namespace lfdyn
