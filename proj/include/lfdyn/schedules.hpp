#pragma once

// Degree schedules: declarative descriptions of alpha_i^k(t) and
// beta_i^k(t) (and the legacy target weights), drawn reproducibly from a
// counter-based generator keyed by (seed, agent, group, t).

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "lfdyn/errors.hpp"
#include "lfdyn/model.hpp"
#include "lfdyn/philox.hpp"

namespace lfdyn {

struct ConstantRule {
  double value{0.0};
  bool operator==(const ConstantRule&) const = default;
};

/// value_a with probability prob_a, value_b otherwise; independent across
/// agents and steps.
struct BernoulliMixRule {
  double value_a{0.0};
  double value_b{0.0};
  double prob_a{0.0};
  bool operator==(const BernoulliMixRule&) const = default;
};

/// values[t]; the last entry holds for every t past the end.
struct TableRule {
  std::vector<double> values;
  bool operator==(const TableRule&) const = default;
};

enum class FormulaFamily {
  one_minus_c_over_t_plus_2,  // 1 - c / (t + 2), c in [0, 2]
  c_over_t_plus_2,            // c / (t + 2),     c in [0, 2]
};

struct FormulaRule {
  FormulaFamily family{FormulaFamily::one_minus_c_over_t_plus_2};
  double c{0.0};
  bool operator==(const FormulaRule&) const = default;
};

/// Uniform on [lo, hi), independent across agents and steps.
struct UniformRule {
  double lo{0.0};
  double hi{0.0};
  bool operator==(const UniformRule&) const = default;
};

using ScheduleSpec = std::variant<ConstantRule, BernoulliMixRule, TableRule, FormulaRule, UniformRule>;

inline bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

inline std::vector<std::string> validate_schedule(const ScheduleSpec& spec) {
  std::vector<std::string> out;
  std::visit(
      [&](const auto& rule) {
        using Rule = std::decay_t<decltype(rule)>;
        if constexpr (std::is_same_v<Rule, ConstantRule>) {
          if (!in_unit(rule.value)) out.push_back("constant value must lie in [0, 1]");
        } else if constexpr (std::is_same_v<Rule, BernoulliMixRule>) {
          if (!in_unit(rule.value_a) || !in_unit(rule.value_b))
            out.push_back("bernoulli_mix values must lie in [0, 1]");
          if (!in_unit(rule.prob_a)) out.push_back("bernoulli_mix probability must lie in [0, 1]");
        } else if constexpr (std::is_same_v<Rule, TableRule>) {
          if (rule.values.empty()) out.push_back("table must have at least one value");
          if (!std::all_of(rule.values.begin(), rule.values.end(), in_unit))
            out.push_back("table values must lie in [0, 1]");
        } else if constexpr (std::is_same_v<Rule, FormulaRule>) {
          if (!(rule.c >= 0.0 && rule.c <= 2.0)) out.push_back("formula coefficient c must lie in [0, 2]");
        } else {
          if (!in_unit(rule.lo) || !in_unit(rule.hi) || !(rule.lo <= rule.hi))
            out.push_back("uniform bounds must satisfy 0 <= lo <= hi <= 1");
        }
      },
      spec);
  return out;
}

/// Least upper bound of every value the schedule can produce.
inline double schedule_max(const ScheduleSpec& spec) {
  return std::visit(
      [](const auto& rule) -> double {
        using Rule = std::decay_t<decltype(rule)>;
        if constexpr (std::is_same_v<Rule, ConstantRule>) {
          return rule.value;
        } else if constexpr (std::is_same_v<Rule, BernoulliMixRule>) {
          if (rule.prob_a >= 1.0) return rule.value_a;
          if (rule.prob_a <= 0.0) return rule.value_b;
          return std::max(rule.value_a, rule.value_b);
        } else if constexpr (std::is_same_v<Rule, TableRule>) {
          return *std::max_element(rule.values.begin(), rule.values.end());
        } else if constexpr (std::is_same_v<Rule, FormulaRule>) {
          return rule.family == FormulaFamily::one_minus_c_over_t_plus_2 ? 1.0 : rule.c / 2.0;
        } else {
          return rule.hi;
        }
      },
      spec);
}

/// Value at step t given a uniform variate u in [0, 1).
inline double schedule_value(const ScheduleSpec& spec, std::uint64_t t, double u) {
  return std::visit(
      [&](const auto& rule) -> double {
        using Rule = std::decay_t<decltype(rule)>;
        if constexpr (std::is_same_v<Rule, ConstantRule>) {
          return rule.value;
        } else if constexpr (std::is_same_v<Rule, BernoulliMixRule>) {
          return u < rule.prob_a ? rule.value_a : rule.value_b;
        } else if constexpr (std::is_same_v<Rule, TableRule>) {
          return rule.values[std::min<std::uint64_t>(t, rule.values.size() - 1)];
        } else if constexpr (std::is_same_v<Rule, FormulaRule>) {
          const double q = rule.c / (static_cast<double>(t) + 2.0);
          return rule.family == FormulaFamily::one_minus_c_over_t_plus_2 ? 1.0 - q : q;
        } else {
          return rule.lo + (rule.hi - rule.lo) * u;
        }
      },
      spec);
}

inline double draw_alpha(const ScheduleSpec& spec, Index agent, std::size_t group, std::uint64_t t,
                         RngKey key) {
  const double u = uniform01(key, DrawPurpose::degree, agent, static_cast<std::uint32_t>(group), t);
  return schedule_value(spec, t, u);
}

/// One draw per leader group k, each from its own (agent, k, t) stream.
inline std::vector<double> draw_beta_vector(std::span<const ScheduleSpec> specs, Index agent,
                                            std::uint64_t t, RngKey key) {
  std::vector<double> out(specs.size());
  for (std::size_t k = 0; k < specs.size(); ++k) out[k] = draw_alpha(specs[k], agent, k, t, key);
  return out;
}

// ---------------------------------------------------------------------------

enum class DegreeKind {
  alpha,   // mixed leaders: weight on the group-neighbor average
  beta,    // followers: weight on leader group k's neighbor average
  weight,  // legacy leaders: weight on the target (w_i / z_i)
};

inline std::string_view to_string(DegreeKind kind) {
  switch (kind) {
    case DegreeKind::alpha: return "alpha";
    case DegreeKind::beta: return "beta";
    case DegreeKind::weight: return "weight";
  }
  return "?";
}

/// Binds a spec to a leader group (alpha/weight) or to the followers'
/// weight on a leader group (beta). `agents` narrows the binding to specific
/// global agent indices; later bindings override earlier ones.
struct ScheduleBinding {
  DegreeKind degree{DegreeKind::alpha};
  std::size_t group{0};
  std::optional<std::vector<Index>> agents;
  ScheduleSpec spec{ConstantRule{}};

  bool operator==(const ScheduleBinding&) const = default;
};

/// Resolved per-agent schedules. Followers without a beta binding for a group
/// use constant(0).
class ScheduleSet {
 public:
  ScheduleSet() = default;

  ScheduleSet(const GroupStructure& structure, Mode mode, std::vector<ScheduleBinding> bindings)
      : bindings_(std::move(bindings)) {
    std::vector<std::string> problems;
    const std::size_t n = structure.n_agents;
    const std::size_t m = structure.group_count();
    const auto group_of = group_assignment(structure);
    const DegreeKind leader_kind = mode == Mode::mixed ? DegreeKind::alpha : DegreeKind::weight;

    leader_spec_.assign(n, kUnbound);
    follower_specs_.assign(n, std::vector<std::size_t>(m, kZero));

    for (std::size_t b = 0; b < bindings_.size(); ++b) {
      const auto& binding = bindings_[b];
      const std::string where = "schedule #" + std::to_string(b) + " (" +
                                std::string(to_string(binding.degree)) + ")";
      for (const auto& problem : validate_schedule(binding.spec)) problems.push_back(where + ": " + problem);
      if (binding.group >= m) {
        problems.push_back(where + ": leader group index " + std::to_string(binding.group) +
                           " out of range");
        continue;
      }
      if (binding.degree != DegreeKind::beta && binding.degree != leader_kind) {
        problems.push_back(where + ": degree '" + std::string(to_string(binding.degree)) +
                           "' is not used in " + std::string(to_string(mode)) + " mode");
        continue;
      }
      const bool for_followers = binding.degree == DegreeKind::beta;
      const std::vector<Index>& scope =
          binding.agents ? *binding.agents
                         : (for_followers ? structure.followers : structure.leader_groups[binding.group].members);
      for (Index i : scope) {
        const bool ok = i < n && (for_followers ? group_of[i] == kFollowerRole
                                                : group_of[i] == static_cast<int>(binding.group));
        if (!ok) {
          problems.push_back(where + ": agent " + std::to_string(i) + " is not " +
                             (for_followers ? std::string("a follower")
                                            : "in leader group " + structure.leader_groups[binding.group].name));
          continue;
        }
        if (for_followers)
          follower_specs_[i][binding.group] = b;
        else
          leader_spec_[i] = b;
      }
    }

    for (std::size_t k = 0; k < m; ++k)
      for (Index i : structure.leader_groups[k].members)
        if (leader_spec_[i] == kUnbound) {
          problems.push_back("leader group " + structure.leader_groups[k].name + ": agent " +
                             std::to_string(i) + " has no " + std::string(to_string(leader_kind)) +
                             " schedule");
          break;
        }
    for (Index i : structure.followers) {
      double worst = 0.0;
      for (std::size_t k = 0; k < m; ++k) worst += max_of(follower_specs_[i][k]);
      if (worst > 1.0 + kWeightSumSlack) {
        problems.push_back("follower " + std::to_string(i) +
                           ": worst-case sum of beta schedules is " + std::to_string(worst) +
                           " > 1");
        break;
      }
    }
    if (!problems.empty()) throw ValidationError(std::move(problems));
  }

  const std::vector<ScheduleBinding>& bindings() const noexcept { return bindings_; }

  const ScheduleSpec& leader_spec(Index agent) const { return bindings_[leader_spec_[agent]].spec; }

  const ScheduleSpec& beta_spec(Index agent, std::size_t group) const {
    const std::size_t b = follower_specs_[agent][group];
    return b == kZero ? zero_spec() : bindings_[b].spec;
  }

  std::vector<ScheduleSpec> beta_specs(Index agent) const {
    std::vector<ScheduleSpec> out;
    for (std::size_t k = 0; k < follower_specs_[agent].size(); ++k) out.push_back(beta_spec(agent, k));
    return out;
  }

  /// Raw draws for step t, before any empty-neighborhood zeroing.
  DegreeAssignment draw(const GroupStructure& structure, std::uint64_t t, RngKey key) const {
    DegreeAssignment out;
    out.alpha.assign(structure.n_agents, 0.0);
    out.beta.assign(structure.n_agents, {});
    for (std::size_t k = 0; k < structure.group_count(); ++k)
      for (Index i : structure.leader_groups[k].members)
        out.alpha[i] = draw_alpha(leader_spec(i), i, k, t, key);
    for (Index i : structure.followers) {
      auto& row = out.beta[i];
      row.resize(structure.group_count());
      for (std::size_t k = 0; k < row.size(); ++k) row[k] = draw_alpha(beta_spec(i, k), i, k, t, key);
    }
    return out;
  }

 private:
  static constexpr std::size_t kUnbound = static_cast<std::size_t>(-1);
  static constexpr std::size_t kZero = static_cast<std::size_t>(-2);

  static const ScheduleSpec& zero_spec() {
    static const ScheduleSpec zero{ConstantRule{0.0}};
    return zero;
  }
  double max_of(std::size_t b) const { return b == kZero ? 0.0 : schedule_max(bindings_[b].spec); }

  std::vector<ScheduleBinding> bindings_;
  std::vector<std::size_t> leader_spec_;
  std::vector<std::vector<std::size_t>> follower_specs_;
};

}  // namespace lfdyn
