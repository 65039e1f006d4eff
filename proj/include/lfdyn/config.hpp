#pragma once

// Scenario configuration: an INI-style text format with one section per
// group and per schedule. The grammar is described in README.md.
//
//   [scenario]            run-wide settings
//   [leader_group NAME]   one per leader group, in agent order
//   [followers]           at most one
//   [schedule]            binds a degree spec to a group (later sections win)
//
// Agents are numbered by section order: the first declared group gets
// 0..size-1, the next continues from there. Alternatively every group lists
// its global indices with `members`; then the sections must partition
// 0..N-1 exactly. Per-member values (explicit points, epsilons, schedule
// `agents`) follow the order in which members are listed.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lfdyn/engine.hpp"
#include "lfdyn/errors.hpp"
#include "lfdyn/model.hpp"
#include "lfdyn/philox.hpp"
#include "lfdyn/schedules.hpp"

namespace lfdyn {

struct UniformBoxInit {
  Opinion lo;
  Opinion hi;
  bool operator==(const UniformBoxInit&) const = default;
};

struct ExplicitInit {
  std::vector<Opinion> points;
  bool operator==(const ExplicitInit&) const = default;
};

using InitSpec = std::variant<UniformBoxInit, ExplicitInit>;

enum class GroupRole { leader, followers };

struct GroupConfig {
  GroupRole role{GroupRole::leader};
  std::string name;  // "F" for the follower section
  std::size_t size{0};
  std::optional<std::vector<Index>> members;  // global indices, listed order
  Opinion target;  // leaders only
  InitSpec init{UniformBoxInit{}};
  std::optional<double> epsilon;  // legacy: threshold for every member
  std::vector<double> epsilons;   // legacy: one threshold per member

  bool operator==(const GroupConfig&) const = default;
};

struct ScheduleConfig {
  DegreeKind degree{DegreeKind::alpha};
  std::string group;                        // leader group name
  std::optional<std::vector<Index>> agents;  // indices local to the bound group
  ScheduleSpec spec{ConstantRule{}};

  bool operator==(const ScheduleConfig&) const = default;
};

struct ScenarioConfig {
  std::string name;
  std::size_t dimension{1};
  double epsilon{0.0};
  Norm norm{Norm::euclidean};
  Mode mode{Mode::mixed};
  std::uint64_t seed{0};
  Termination termination;
  std::uint64_t snapshot_stride{0};  // 0 = automatic
  NeighborSearch neighbor_search{NeighborSearch::automatic};
  std::string trajectory_path;
  std::string metrics_path;
  std::vector<GroupConfig> groups;
  std::vector<ScheduleConfig> schedules;

  bool operator==(const ScenarioConfig&) const = default;

  std::size_t n_agents() const {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.size;
    return n;
  }
};

/// A problem anchored to a config field. `section` is the header as written
/// ("scenario", "leader_group L1", "followers", "schedule #2").
struct ConfigProblem {
  std::string section;
  std::string key;
  std::string message;
};

inline std::string_view to_string(NeighborSearch s) {
  switch (s) {
    case NeighborSearch::automatic: return "auto";
    case NeighborSearch::naive: return "naive";
    case NeighborSearch::grid: return "grid";
  }
  return "?";
}

inline std::string_view to_string(FormulaFamily f) {
  return f == FormulaFamily::one_minus_c_over_t_plus_2 ? "one_minus_c_over_t_plus_2" : "c_over_t_plus_2";
}

namespace detail {

inline std::string section_id(const ScenarioConfig& config, std::size_t group_index) {
  const auto& g = config.groups[group_index];
  return g.role == GroupRole::followers ? std::string("followers") : "leader_group " + g.name;
}

inline std::string schedule_id(std::size_t index) { return "schedule #" + std::to_string(index); }

inline std::string fmt_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

/// Field-level validation. Empty means build_scenario will succeed.
inline std::vector<ConfigProblem> validate_config(const ScenarioConfig& config) {
  std::vector<ConfigProblem> out;
  auto add = [&](std::string section, std::string key, std::string message) {
    out.push_back({std::move(section), std::move(key), std::move(message)});
  };
  const std::size_t d = config.dimension;
  const bool legacy = config.mode == Mode::legacy;

  if (d == 0) add("scenario", "dimension", "must be >= 1");
  if (!(config.epsilon >= 0.0)) add("scenario", "epsilon", "must be >= 0 (got " + detail::fmt_number(config.epsilon) + ")");
  if (config.termination.max_steps >= (std::uint64_t{1} << 56)) add("scenario", "max_steps", "must be < 2^56");
  if (config.termination.displacement_tol && !(*config.termination.displacement_tol >= 0.0))
    add("scenario", "tol_displacement", "must be >= 0");
  if (config.termination.limit_tol && !(*config.termination.limit_tol >= 0.0))
    add("scenario", "tol_limit", "must be >= 0");

  std::size_t leader_groups = 0;
  std::size_t follower_sections = 0;
  std::set<std::string> names;
  std::map<std::string, std::size_t> group_size;
  std::vector<std::size_t> leader_order;
  for (std::size_t gi = 0; gi < config.groups.size(); ++gi) {
    const auto& g = config.groups[gi];
    const std::string sec = detail::section_id(config, gi);
    if (g.role == GroupRole::leader) {
      ++leader_groups;
      leader_order.push_back(gi);
      if (g.name.empty() || g.name == "F") add(sec, "", "leader group name must be nonempty and not 'F'");
      if (!names.insert(g.name).second) add(sec, "", "duplicate leader group name '" + g.name + "'");
      group_size[g.name] = g.size;
      if (g.size == 0) add(sec, "size", "leader group must have at least one member");
      if (g.target.size() != d)
        add(sec, "target", "has dimension " + std::to_string(g.target.size()) + ", expected " + std::to_string(d));
      else if (!all_finite(g.target))
        add(sec, "target", "must be finite");
    } else {
      ++follower_sections;
    }
    std::visit(
        [&](const auto& init) {
          using Init = std::decay_t<decltype(init)>;
          if constexpr (std::is_same_v<Init, UniformBoxInit>) {
            if (init.lo.size() != d || init.hi.size() != d) {
              add(sec, "init", "uniform bounds must have dimension " + std::to_string(d));
              return;
            }
            for (std::size_t c = 0; c < d; ++c)
              if (!(std::isfinite(init.lo[c]) && std::isfinite(init.hi[c]) && init.lo[c] <= init.hi[c]))
                add(sec, "init", "uniform bounds must be finite with lo <= hi");
            if (legacy)
              for (std::size_t c = 0; c < d; ++c)
                if (init.lo[c] < -1.0 || init.hi[c] > 1.0)
                  add(sec, "init", "legacy mode: opinions must lie in [-1, 1]");
          } else {
            if (init.points.size() != g.size)
              add(sec, "init", "explicit list has " + std::to_string(init.points.size()) + " points, size is " +
                                   std::to_string(g.size));
            for (const auto& p : init.points) {
              if (p.size() != d) {
                add(sec, "init", "explicit point has dimension " + std::to_string(p.size()));
                break;
              }
              if (!all_finite(p)) {
                add(sec, "init", "explicit points must be finite");
                break;
              }
              if (legacy && (p[0] < -1.0 || p[0] > 1.0)) {
                add(sec, "init", "legacy mode: opinions must lie in [-1, 1]");
                break;
              }
            }
          }
        },
        g.init);
    if (!legacy && (g.epsilon || !g.epsilons.empty()))
      add(sec, g.epsilon ? "epsilon" : "epsilons", "per-group thresholds are only allowed in legacy mode");
    if (g.epsilon && !(*g.epsilon >= 0.0)) add(sec, "epsilon", "must be >= 0");
    if (!g.epsilons.empty()) {
      if (g.epsilons.size() != g.size)
        add(sec, "epsilons", "has " + std::to_string(g.epsilons.size()) + " entries, size is " + std::to_string(g.size));
      for (double e : g.epsilons)
        if (!(e >= 0.0)) {
          add(sec, "epsilons", "entries must be >= 0");
          break;
        }
    }
  }
  if (leader_groups == 0) add("scenario", "", "at least one [leader_group] section is required");

  std::size_t explicit_members = 0;
  for (const auto& g : config.groups)
    if (g.members) ++explicit_members;
  if (explicit_members != 0 && explicit_members != config.groups.size())
    add("scenario", "", "either every group lists its members or none does");
  if (explicit_members != 0 && explicit_members == config.groups.size()) {
    const std::size_t n = config.n_agents();
    std::vector<std::optional<std::size_t>> owner(n);
    for (std::size_t gi = 0; gi < config.groups.size(); ++gi) {
      const auto& g = config.groups[gi];
      const std::string sec = detail::section_id(config, gi);
      if (g.members->size() != g.size)
        add(sec, "members", "lists " + std::to_string(g.members->size()) + " agents, size is " + std::to_string(g.size));
      for (Index i : *g.members) {
        if (i >= n) {
          add(sec, "members", "agent " + std::to_string(i) + " is outside [0, " + std::to_string(n) + ")");
          continue;
        }
        if (owner[i]) {
          const std::string other = detail::section_id(config, *owner[i]);
          add(sec, "members", other == sec ? "agent " + std::to_string(i) + " is listed twice"
                                           : "overlap: agent " + std::to_string(i) + " is also in [" + other + "]");
          continue;
        }
        owner[i] = gi;
      }
    }
    for (std::size_t i = 0; i < n; ++i)
      if (!owner[i]) {
        add("scenario", "", "agent " + std::to_string(i) + " belongs to no group");
        break;
      }
  }
  if (follower_sections > 1) add("followers", "", "at most one [followers] section is allowed");

  if (legacy) {
    if (d != 1) add("scenario", "mode", "legacy mode requires dimension = 1");
    if (leader_groups != 2) add("scenario", "mode", "legacy mode requires exactly 2 leader groups");
    if (leader_groups == 2 && d == 1) {
      const auto& pos = config.groups[leader_order[0]];
      const auto& neg = config.groups[leader_order[1]];
      if (pos.target.size() == 1 && !(pos.target[0] >= 0.0 && pos.target[0] <= 1.0))
        add(detail::section_id(config, leader_order[0]), "target", "legacy positive target must lie in [0, 1]");
      if (neg.target.size() == 1 && !(neg.target[0] >= -1.0 && neg.target[0] <= 0.0))
        add(detail::section_id(config, leader_order[1]), "target", "legacy negative target must lie in [-1, 0]");
    }
  }

  std::size_t follower_count = 0;
  for (const auto& g : config.groups)
    if (g.role == GroupRole::followers) follower_count += g.size;

  const DegreeKind leader_kind = legacy ? DegreeKind::weight : DegreeKind::alpha;
  // Worst-case beta sum bookkeeping: per follower, per group, last binding.
  std::vector<std::map<std::string, std::size_t>> beta_owner(follower_count);
  std::map<std::string, std::vector<bool>> leader_bound;
  for (const auto& [name, size] : group_size) leader_bound[name].assign(size, false);

  for (std::size_t si = 0; si < config.schedules.size(); ++si) {
    const auto& s = config.schedules[si];
    const std::string sec = detail::schedule_id(si);
    for (const auto& problem : validate_schedule(s.spec)) add(sec, "spec", problem);
    if (s.degree != DegreeKind::beta && s.degree != leader_kind) {
      add(sec, "degree", "'" + std::string(to_string(s.degree)) + "' is not used in " +
                             std::string(to_string(config.mode)) + " mode");
      continue;
    }
    auto it = group_size.find(s.group);
    if (it == group_size.end()) {
      add(sec, "group", "unknown leader group '" + s.group + "'");
      continue;
    }
    const std::size_t scope = s.degree == DegreeKind::beta ? follower_count : it->second;
    std::vector<Index> all;
    if (!s.agents)
      for (std::size_t j = 0; j < scope; ++j) all.push_back(static_cast<Index>(j));
    const auto& ids = s.agents ? *s.agents : all;
    bool bad = false;
    for (Index j : ids)
      if (j >= scope) bad = true;
    if (bad) {
      add(sec, "agents", "index out of range (group has " + std::to_string(scope) + " members)");
      continue;
    }
    for (Index j : ids) {
      if (s.degree == DegreeKind::beta)
        beta_owner[j][s.group] = si;
      else
        leader_bound[s.group][j] = true;
    }
  }
  for (const auto& [name, bound] : leader_bound)
    if (std::find(bound.begin(), bound.end(), false) != bound.end())
      add("leader_group " + name, "", "some members have no " + std::string(to_string(leader_kind)) + " schedule");
  for (std::size_t j = 0; j < follower_count; ++j) {
    double worst = 0.0;
    std::size_t last = 0;
    for (const auto& [name, si] : beta_owner[j]) {
      worst += schedule_max(config.schedules[si].spec);
      last = std::max(last, si);
    }
    if (worst > 1.0 + kWeightSumSlack) {
      add(detail::schedule_id(last), "spec",
          "worst-case sum of beta over leader groups is " + detail::fmt_number(worst) + " > 1 (follower " +
              std::to_string(j) + ")");
      break;
    }
  }
  return out;
}

inline std::string describe(const ConfigProblem& p) {
  std::string s = "[" + p.section + "]";
  if (!p.key.empty()) s += " " + p.key;
  return s + ": " + p.message;
}

/// Agent count per section and the resolved structure, parameters and
/// initial state. Throws ValidationError when validate_config reports problems.
inline Scenario build_scenario(const ScenarioConfig& config) {
  if (auto problems = validate_config(config); !problems.empty()) {
    std::vector<std::string> text;
    for (const auto& p : problems) text.push_back(describe(p));
    throw ValidationError(std::move(text));
  }
  Scenario s;
  const std::size_t n = config.n_agents();
  const std::size_t d = config.dimension;
  s.structure.n_agents = n;
  s.params.epsilon = config.epsilon;
  s.params.norm = config.norm;
  s.params.mode = config.mode;
  s.key = RngKey{config.seed};
  s.termination = config.termination;
  s.snapshot_stride = config.snapshot_stride != 0 ? config.snapshot_stride : (n <= 1000 ? 1 : 10);
  s.initial = OpinionState{0, OpinionMatrix(n, d)};
  if (config.mode == Mode::legacy) s.params.agent_epsilon.assign(n, config.epsilon);

  std::map<std::string, std::size_t> group_index;
  std::map<std::string, std::vector<Index>> listed;  // group name -> members in listed order
  std::vector<Index> follower_list;
  Index next = 0;
  for (const auto& g : config.groups) {
    std::vector<Index> members(g.size);
    if (g.members)
      members = *g.members;
    else
      for (std::size_t j = 0; j < g.size; ++j) members[j] = next + static_cast<Index>(j);
    std::vector<Index> sorted = members;
    std::sort(sorted.begin(), sorted.end());
    if (g.role == GroupRole::leader) {
      group_index[g.name] = s.structure.leader_groups.size();
      listed[g.name] = members;
      s.structure.leader_groups.push_back({g.name, sorted, g.target});
    } else {
      follower_list = members;
      s.structure.followers = sorted;
    }
    for (std::size_t j = 0; j < g.size; ++j) {
      const Index agent = members[j];
      auto row = s.initial.opinions.row(agent);
      if (const auto* box = std::get_if<UniformBoxInit>(&g.init)) {
        for (std::size_t c = 0; c < d; ++c) {
          const double u = uniform01(s.key, DrawPurpose::initial_opinion, agent, static_cast<std::uint32_t>(c), 0);
          double v = box->lo[c] + (box->hi[c] - box->lo[c]) * u;
          if (v >= box->hi[c] && box->hi[c] > box->lo[c]) v = std::nextafter(box->hi[c], box->lo[c]);
          row[c] = v;
        }
      } else {
        const auto& p = std::get<ExplicitInit>(g.init).points[j];
        std::copy(p.begin(), p.end(), row.begin());
      }
      if (config.mode == Mode::legacy) {
        if (!g.epsilons.empty())
          s.params.agent_epsilon[agent] = g.epsilons[j];
        else if (g.epsilon)
          s.params.agent_epsilon[agent] = *g.epsilon;
      }
    }
    next += static_cast<Index>(g.size);
  }

  for (const auto& sc : config.schedules) {
    ScheduleBinding b;
    b.degree = sc.degree;
    b.group = group_index.at(sc.group);
    b.spec = sc.spec;
    if (sc.agents) {
      const auto& scope = sc.degree == DegreeKind::beta ? follower_list : listed.at(sc.group);
      std::vector<Index> global;
      for (Index j : *sc.agents) global.push_back(scope[j]);
      b.agents = std::move(global);
    }
    s.schedules.push_back(std::move(b));
  }
  validate_scenario(s);
  return s;
}

inline Trajectory run(const ScenarioConfig& config, const EngineOptions& options = {}) {
  EngineOptions opts = options;
  if (opts.search == NeighborSearch::automatic) opts.search = config.neighbor_search;
  return run(build_scenario(config), opts);
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

struct RawEntry {
  std::string key;
  std::string value;
  std::size_t line;
};

struct RawSection {
  std::string kind;  // scenario | leader_group | followers | schedule
  std::string arg;
  std::size_t line;
  std::vector<RawEntry> entries;
};

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

class SyntaxError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument of a call expression: a number, a bracketed vector, or a word.
using Arg = std::variant<double, std::vector<double>, std::string>;

class ValueReader {
 public:
  explicit ValueReader(std::string_view text) : s_(text) {}

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool done() {
    skip_ws();
    return pos_ == s_.size();
  }
  bool peek(char c) {
    skip_ws();
    return pos_ < s_.size() && s_[pos_] == c;
  }
  void expect(char c) {
    if (!peek(c)) throw SyntaxError(std::string("expected '") + c + "' in '" + std::string(s_) + "'");
    ++pos_;
  }
  bool accept(char c) {
    if (!peek(c)) return false;
    ++pos_;
    return true;
  }

  std::string word() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    if (start == pos_) throw SyntaxError("expected a name in '" + std::string(s_) + "'");
    return std::string(s_.substr(start, pos_ - start));
  }

  /// number, optionally written as a fraction "p/q".
  double number() {
    double v = plain_number();
    if (accept('/')) {
      const double q = plain_number();
      if (q == 0.0) throw SyntaxError("division by zero in '" + std::string(s_) + "'");
      v /= q;
    }
    return v;
  }

  std::vector<double> bracketed() {
    expect('[');
    std::vector<double> out;
    if (accept(']')) return out;
    do out.push_back(number());
    while (accept(','));
    expect(']');
    return out;
  }

  Arg arg() {
    skip_ws();
    if (peek('[')) return bracketed();
    if (pos_ < s_.size() && (std::isalpha(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
      const std::size_t save = pos_;
      std::string w = word();
      if (w == "inf" || w == "nan") {
        pos_ = save;
        return number();
      }
      return w;
    }
    return number();
  }

 private:
  double plain_number() {
    skip_ws();
    const char* begin = s_.data() + pos_;
    const char* end = s_.data() + s_.size();
    const char* p = begin;
    if (p != end && *p == '+') ++p;
    double v = 0.0;
    const auto res = std::from_chars(p, end, v);
    if (res.ec != std::errc()) throw SyntaxError("expected a number in '" + std::string(s_) + "'");
    pos_ += static_cast<std::size_t>(res.ptr - begin);
    return v;
  }

  std::string_view s_;
  std::size_t pos_{0};
};

struct Call {
  std::string name;
  std::vector<Arg> args;
};

inline Call parse_call(std::string_view text) {
  ValueReader r(text);
  Call call;
  call.name = r.word();
  r.expect('(');
  if (!r.accept(')')) {
    do call.args.push_back(r.arg());
    while (r.accept(','));
    r.expect(')');
  }
  if (!r.done()) throw SyntaxError("trailing characters after ')' in '" + std::string(text) + "'");
  return call;
}

inline double parse_scalar(std::string_view text) {
  ValueReader r(text);
  const double v = r.number();
  if (!r.done()) throw SyntaxError("expected a single number, got '" + std::string(text) + "'");
  return v;
}

/// "1 2 3", "1, 2, 3" or "[1, 2, 3]".
inline std::vector<double> parse_numbers(std::string_view text) {
  ValueReader r(text);
  if (r.peek('[')) {
    auto v = r.bracketed();
    if (!r.done()) throw SyntaxError("trailing characters after ']' in '" + std::string(text) + "'");
    return v;
  }
  std::vector<double> out;
  while (!r.done()) {
    out.push_back(r.number());
    r.accept(',');
  }
  return out;
}

inline std::uint64_t parse_unsigned(std::string_view text) {
  text = trim(text);
  std::uint64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw SyntaxError("expected a nonnegative integer, got '" + std::string(text) + "'");
  return v;
}

inline std::optional<double> parse_optional_scalar(std::string_view text) {
  if (trim(text) == "none") return std::nullopt;
  return parse_scalar(text);
}

/// "0..9, 12, 15..17" (inclusive ranges).
inline std::vector<Index> parse_index_list(std::string_view text) {
  std::vector<Index> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    if (comma == std::string_view::npos) comma = text.size();
    const std::string_view item = trim(text.substr(start, comma - start));
    if (item.empty()) throw SyntaxError("empty entry in index list '" + std::string(text) + "'");
    if (auto dots = item.find(".."); dots != std::string_view::npos) {
      const auto lo = parse_unsigned(item.substr(0, dots));
      const auto hi = parse_unsigned(item.substr(dots + 2));
      if (hi < lo) throw SyntaxError("descending range '" + std::string(item) + "'");
      for (auto v = lo; v <= hi; ++v) out.push_back(static_cast<Index>(v));
    } else {
      out.push_back(static_cast<Index>(parse_unsigned(item)));
    }
    start = comma + 1;
  }
  return out;
}

inline double arg_number(const Call& call, std::size_t i) {
  if (i >= call.args.size()) throw SyntaxError(call.name + "(): missing argument " + std::to_string(i + 1));
  if (const auto* v = std::get_if<double>(&call.args[i])) return *v;
  throw SyntaxError(call.name + "(): argument " + std::to_string(i + 1) + " must be a number");
}

inline void arg_count(const Call& call, std::size_t n) {
  if (call.args.size() != n)
    throw SyntaxError(call.name + "() takes " + std::to_string(n) + " arguments, got " +
                      std::to_string(call.args.size()));
}

inline ScheduleSpec parse_schedule_spec(std::string_view text) {
  const Call call = parse_call(text);
  if (call.name == "constant") {
    arg_count(call, 1);
    return ConstantRule{arg_number(call, 0)};
  }
  if (call.name == "bernoulli_mix") {
    arg_count(call, 3);
    return BernoulliMixRule{arg_number(call, 0), arg_number(call, 1), arg_number(call, 2)};
  }
  if (call.name == "table") {
    TableRule rule;
    for (std::size_t i = 0; i < call.args.size(); ++i) rule.values.push_back(arg_number(call, i));
    return rule;
  }
  if (call.name == "formula") {
    arg_count(call, 2);
    const auto* family = std::get_if<std::string>(&call.args[0]);
    FormulaRule rule;
    if (family && *family == "one_minus_c_over_t_plus_2")
      rule.family = FormulaFamily::one_minus_c_over_t_plus_2;
    else if (family && *family == "c_over_t_plus_2")
      rule.family = FormulaFamily::c_over_t_plus_2;
    else
      throw SyntaxError("formula(): unknown family (use one_minus_c_over_t_plus_2 or c_over_t_plus_2)");
    rule.c = arg_number(call, 1);
    return rule;
  }
  if (call.name == "uniform") {
    arg_count(call, 2);
    return UniformRule{arg_number(call, 0), arg_number(call, 1)};
  }
  throw SyntaxError("unknown schedule kind '" + call.name + "'");
}

inline Opinion arg_point(const Call& call, std::size_t i, std::size_t dim) {
  if (const auto* v = std::get_if<double>(&call.args[i])) return Opinion(dim, *v);
  if (const auto* v = std::get_if<std::vector<double>>(&call.args[i])) return *v;
  throw SyntaxError(call.name + "(): argument " + std::to_string(i + 1) + " must be a number or [vector]");
}

inline InitSpec parse_init(std::string_view text, std::size_t dim) {
  const Call call = parse_call(text);
  if (call.name == "uniform") {
    arg_count(call, 2);
    return UniformBoxInit{arg_point(call, 0, dim), arg_point(call, 1, dim)};
  }
  if (call.name == "explicit") {
    ExplicitInit init;
    for (std::size_t i = 0; i < call.args.size(); ++i) init.points.push_back(arg_point(call, i, dim));
    return init;
  }
  throw SyntaxError("unknown initializer '" + call.name + "' (use uniform or explicit)");
}

}  // namespace detail

/// Parse and fully validate. Errors carry the line of the offending field.
inline ScenarioConfig parse_config(std::string_view text) {
  using namespace detail;
  std::vector<std::string> errors;
  std::vector<RawSection> sections;

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string at = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') {
        errors.push_back(at + "unterminated section header");
        continue;
      }
      std::string_view inner = trim(line.substr(1, line.size() - 2));
      const auto space = inner.find_first_of(" \t");
      RawSection sec;
      sec.kind = std::string(inner.substr(0, space));
      sec.arg = space == std::string_view::npos ? "" : std::string(trim(inner.substr(space)));
      sec.line = line_no;
      const bool known = sec.kind == "scenario" || sec.kind == "leader_group" || sec.kind == "followers" ||
                         sec.kind == "schedule";
      if (!known) errors.push_back(at + "unknown section [" + sec.kind + "]");
      else if ((sec.kind == "leader_group") == sec.arg.empty())
        errors.push_back(at + (sec.arg.empty() ? "[leader_group] needs a name" : "[" + sec.kind + "] takes no name"));
      sections.push_back(std::move(sec));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      errors.push_back(at + "expected 'key = value'");
      continue;
    }
    if (sections.empty()) {
      errors.push_back(at + "key outside of any section");
      continue;
    }
    sections.back().entries.push_back(
        {std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))), line_no});
  }
  if (!errors.empty()) throw ValidationError(std::move(errors));

  ScenarioConfig config;
  std::map<std::string, std::size_t> anchors;  // "section|key" -> line
  auto anchor = [&](const std::string& section, const std::string& key) -> std::size_t {
    if (auto it = anchors.find(section + "|" + key); it != anchors.end()) return it->second;
    if (auto it = anchors.find(section + "|"); it != anchors.end()) return it->second;
    return 0;
  };

  // [scenario] first, since group values depend on the dimension.
  std::size_t scenario_sections = 0;
  for (const auto& sec : sections) {
    if (sec.kind != "scenario") continue;
    if (++scenario_sections > 1) {
      errors.push_back("line " + std::to_string(sec.line) + ": duplicate [scenario] section");
      continue;
    }
    anchors["scenario|"] = sec.line;
    bool has_dimension = false;
    bool has_epsilon = false;
    std::set<std::string> seen;
    for (const auto& e : sec.entries) {
      const std::string at = "line " + std::to_string(e.line) + ": [scenario] " + e.key + ": ";
      anchors["scenario|" + e.key] = e.line;
      if (!seen.insert(e.key).second) {
        errors.push_back(at + "duplicate key");
        continue;
      }
      try {
        if (e.key == "name") config.name = e.value;
        else if (e.key == "dimension") config.dimension = parse_unsigned(e.value), has_dimension = true;
        else if (e.key == "epsilon") config.epsilon = parse_scalar(e.value), has_epsilon = true;
        else if (e.key == "norm") {
          if (e.value == "euclidean") config.norm = Norm::euclidean;
          else if (e.value == "chebyshev") config.norm = Norm::chebyshev;
          else throw SyntaxError("expected euclidean or chebyshev");
        } else if (e.key == "mode") {
          if (e.value == "mixed") config.mode = Mode::mixed;
          else if (e.value == "legacy") config.mode = Mode::legacy;
          else throw SyntaxError("expected mixed or legacy");
        } else if (e.key == "seed") config.seed = parse_unsigned(e.value);
        else if (e.key == "max_steps") config.termination.max_steps = parse_unsigned(e.value);
        else if (e.key == "tol_displacement") config.termination.displacement_tol = parse_optional_scalar(e.value);
        else if (e.key == "tol_limit") config.termination.limit_tol = parse_optional_scalar(e.value);
        else if (e.key == "snapshot_stride") config.snapshot_stride = e.value == "auto" ? 0 : parse_unsigned(e.value);
        else if (e.key == "neighbor_search") {
          if (e.value == "auto") config.neighbor_search = NeighborSearch::automatic;
          else if (e.value == "naive") config.neighbor_search = NeighborSearch::naive;
          else if (e.value == "grid") config.neighbor_search = NeighborSearch::grid;
          else throw SyntaxError("expected auto, naive or grid");
        } else if (e.key == "trajectory") config.trajectory_path = e.value;
        else if (e.key == "metrics") config.metrics_path = e.value;
        else throw SyntaxError("unknown key");
      } catch (const SyntaxError& err) {
        errors.push_back(at + err.what());
      }
    }
    if (!has_dimension) errors.push_back("line " + std::to_string(sec.line) + ": [scenario] dimension: required");
    if (!has_epsilon) errors.push_back("line " + std::to_string(sec.line) + ": [scenario] epsilon: required");
  }
  if (scenario_sections == 0) errors.push_back("line 1: missing [scenario] section");
  if (!errors.empty()) throw ValidationError(std::move(errors));

  const std::size_t d = config.dimension;
  std::size_t schedule_index = 0;
  for (const auto& sec : sections) {
    if (sec.kind == "scenario") continue;
    std::set<std::string> seen;
    if (sec.kind == "schedule") {
      const std::string id = schedule_id(schedule_index++);
      anchors[id + "|"] = sec.line;
      ScheduleConfig sc;
      bool has_degree = false, has_group = false, has_spec = false;
      for (const auto& e : sec.entries) {
        const std::string at = "line " + std::to_string(e.line) + ": [" + id + "] " + e.key + ": ";
        anchors[id + "|" + e.key] = e.line;
        if (!seen.insert(e.key).second) {
          errors.push_back(at + "duplicate key");
          continue;
        }
        try {
          if (e.key == "degree") {
            has_degree = true;
            if (e.value == "alpha") sc.degree = DegreeKind::alpha;
            else if (e.value == "beta") sc.degree = DegreeKind::beta;
            else if (e.value == "weight") sc.degree = DegreeKind::weight;
            else throw SyntaxError("expected alpha, beta or weight");
          } else if (e.key == "group") {
            has_group = true;
            sc.group = e.value;
          } else if (e.key == "agents") {
            sc.agents = parse_index_list(e.value);
          } else if (e.key == "spec") {
            has_spec = true;
            sc.spec = parse_schedule_spec(e.value);
          } else {
            throw SyntaxError("unknown key");
          }
        } catch (const SyntaxError& err) {
          errors.push_back(at + err.what());
        }
      }
      const std::string at = "line " + std::to_string(sec.line) + ": [" + id + "] ";
      if (!has_degree) errors.push_back(at + "degree: required");
      if (!has_group) errors.push_back(at + "group: required");
      if (!has_spec) errors.push_back(at + "spec: required");
      config.schedules.push_back(std::move(sc));
      continue;
    }

    GroupConfig g;
    g.role = sec.kind == "followers" ? GroupRole::followers : GroupRole::leader;
    g.name = g.role == GroupRole::followers ? "F" : sec.arg;
    const std::string id = g.role == GroupRole::followers ? "followers" : "leader_group " + g.name;
    anchors[id + "|"] = sec.line;
    bool has_size = false, has_init = false, has_target = false;
    for (const auto& e : sec.entries) {
      const std::string at = "line " + std::to_string(e.line) + ": [" + id + "] " + e.key + ": ";
      anchors[id + "|" + e.key] = e.line;
      if (!seen.insert(e.key).second) {
        errors.push_back(at + "duplicate key");
        continue;
      }
      try {
        if (e.key == "size") g.size = parse_unsigned(e.value), has_size = true;
        else if (e.key == "members") g.members = parse_index_list(e.value);
        else if (e.key == "init") g.init = parse_init(e.value, d), has_init = true;
        else if (e.key == "target" && g.role == GroupRole::leader) g.target = parse_numbers(e.value), has_target = true;
        else if (e.key == "epsilon") g.epsilon = parse_scalar(e.value);
        else if (e.key == "epsilons") g.epsilons = parse_numbers(e.value);
        else throw SyntaxError("unknown key");
      } catch (const SyntaxError& err) {
        errors.push_back(at + err.what());
      }
    }
    const std::string at = "line " + std::to_string(sec.line) + ": [" + id + "] ";
    if (!has_size && g.members) g.size = g.members->size();
    else if (!has_size) errors.push_back(at + "size: required");
    if (!has_init && g.size > 0) errors.push_back(at + "init: required");
    if (!has_init) g.init = ExplicitInit{};
    if (!has_target && g.role == GroupRole::leader) errors.push_back(at + "target: required");
    config.groups.push_back(std::move(g));
  }
  if (!errors.empty()) throw ValidationError(std::move(errors));

  if (auto problems = validate_config(config); !problems.empty()) {
    for (const auto& p : problems)
      errors.push_back("line " + std::to_string(anchor(p.section, p.key)) + ": " + describe(p));
    throw ValidationError(std::move(errors));
  }
  return config;
}

// ---------------------------------------------------------------------------
// Writing

namespace detail {

inline std::string fmt_point(const Opinion& p) {
  if (p.size() == 1) return fmt_number(p[0]);
  std::string s = "[";
  for (std::size_t c = 0; c < p.size(); ++c) {
    if (c) s += ", ";
    s += fmt_number(p[c]);
  }
  return s + "]";
}

inline std::string fmt_numbers(const std::vector<double>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ", ";
    s += fmt_number(values[i]);
  }
  return s;
}

inline std::string fmt_index_list(const std::vector<Index>& ids) {
  std::string s;
  for (std::size_t i = 0; i < ids.size();) {
    std::size_t j = i;
    while (j + 1 < ids.size() && ids[j + 1] == ids[j] + 1) ++j;
    if (!s.empty()) s += ", ";
    s += std::to_string(ids[i]);
    if (j > i) s += ".." + std::to_string(ids[j]);
    i = j + 1;
  }
  return s;
}

inline std::string fmt_spec(const ScheduleSpec& spec) {
  return std::visit(
      [](const auto& rule) -> std::string {
        using Rule = std::decay_t<decltype(rule)>;
        if constexpr (std::is_same_v<Rule, ConstantRule>) {
          return "constant(" + fmt_number(rule.value) + ")";
        } else if constexpr (std::is_same_v<Rule, BernoulliMixRule>) {
          return "bernoulli_mix(" + fmt_number(rule.value_a) + ", " + fmt_number(rule.value_b) + ", " +
                 fmt_number(rule.prob_a) + ")";
        } else if constexpr (std::is_same_v<Rule, TableRule>) {
          return "table(" + fmt_numbers(rule.values) + ")";
        } else if constexpr (std::is_same_v<Rule, FormulaRule>) {
          return "formula(" + std::string(to_string(rule.family)) + ", " + fmt_number(rule.c) + ")";
        } else {
          return "uniform(" + fmt_number(rule.lo) + ", " + fmt_number(rule.hi) + ")";
        }
      },
      spec);
}

inline std::string fmt_init(const InitSpec& init) {
  if (const auto* box = std::get_if<UniformBoxInit>(&init))
    return "uniform(" + fmt_point(box->lo) + ", " + fmt_point(box->hi) + ")";
  std::string s = "explicit(";
  const auto& points = std::get<ExplicitInit>(init).points;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i) s += ", ";
    s += fmt_point(points[i]);
  }
  return s + ")";
}

}  // namespace detail

/// Canonical text; parse_config(write_config(c)) == c for every valid c.
inline std::string write_config(const ScenarioConfig& config) {
  using namespace detail;
  std::ostringstream out;
  out << "[scenario]\n";
  if (!config.name.empty()) out << "name = " << config.name << "\n";
  out << "dimension = " << config.dimension << "\n"
      << "epsilon = " << fmt_number(config.epsilon) << "\n"
      << "norm = " << to_string(config.norm) << "\n"
      << "mode = " << to_string(config.mode) << "\n"
      << "seed = " << config.seed << "\n"
      << "max_steps = " << config.termination.max_steps << "\n"
      << "tol_displacement = "
      << (config.termination.displacement_tol ? fmt_number(*config.termination.displacement_tol) : "none") << "\n"
      << "tol_limit = " << (config.termination.limit_tol ? fmt_number(*config.termination.limit_tol) : "none")
      << "\n"
      << "snapshot_stride = " << (config.snapshot_stride == 0 ? "auto" : std::to_string(config.snapshot_stride))
      << "\n"
      << "neighbor_search = " << to_string(config.neighbor_search) << "\n";
  if (!config.trajectory_path.empty()) out << "trajectory = " << config.trajectory_path << "\n";
  if (!config.metrics_path.empty()) out << "metrics = " << config.metrics_path << "\n";

  for (const auto& g : config.groups) {
    out << "\n";
    if (g.role == GroupRole::leader)
      out << "[leader_group " << g.name << "]\n";
    else
      out << "[followers]\n";
    out << "size = " << g.size << "\n";
    if (g.members) out << "members = " << fmt_index_list(*g.members) << "\n";
    if (g.role == GroupRole::leader) out << "target = " << fmt_point(g.target) << "\n";
    out << "init = " << fmt_init(g.init) << "\n";
    if (g.epsilon) out << "epsilon = " << fmt_number(*g.epsilon) << "\n";
    if (!g.epsilons.empty()) out << "epsilons = " << fmt_numbers(g.epsilons) << "\n";
  }
  for (const auto& s : config.schedules) {
    out << "\n[schedule]\n"
        << "degree = " << to_string(s.degree) << "\n"
        << "group = " << s.group << "\n";
    if (s.agents) out << "agents = " << fmt_index_list(*s.agents) << "\n";
    out << "spec = " << fmt_spec(s.spec) << "\n";
  }
  return out.str();
}

}  // namespace lfdyn
