#pragma once

// Trajectory CSV, metrics JSON and long-format plot data.
//
// trajectory.csv   t,agent,group,role,x0,...,x{d-1}   sorted by (t, agent)
// plot.csv         agent,group,role,coord,t,value     sorted by (agent, coord, t)

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "lfdyn/analysis.hpp"
#include "lfdyn/engine.hpp"
#include "lfdyn/errors.hpp"

namespace lfdyn {

namespace detail {

inline void append_double(std::string& out, double v) {
  char buf[40];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
  out.append(buf, static_cast<std::size_t>(len));
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw RuntimeFailure("cannot open '" + path + "' for writing");
  file.write(content.data(), static_cast<std::streamsize>(content.size()));
  file.close();
  if (!file) throw RuntimeFailure("write to '" + path + "' failed");
}

inline std::string read_file(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw RuntimeFailure("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << file.rdbuf();
  if (file.bad()) throw RuntimeFailure("read from '" + path + "' failed");
  return ss.str();
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

}  // namespace detail

inline std::string trajectory_csv(const Trajectory& traj, const GroupStructure& structure) {
  const std::size_t d = structure.dim();
  const auto group_of = group_assignment(structure);
  std::string out = "t,agent,group,role";
  for (std::size_t c = 0; c < d; ++c) out += ",x" + std::to_string(c);
  out += '\n';
  for (const auto& snap : traj.snapshots) {
    const std::string t = std::to_string(snap.t);
    for (std::size_t i = 0; i < snap.opinions.agents(); ++i) {
      const int k = group_of[i];
      out += t;
      out += ',';
      out += std::to_string(i);
      out += k == kFollowerRole ? ",F,follower" : "," + structure.leader_groups[k].name + ",leader";
      for (double v : snap.opinions.row(i)) {
        out += ',';
        detail::append_double(out, v);
      }
      out += '\n';
    }
  }
  return out;
}

inline void write_trajectory(const Trajectory& traj, const GroupStructure& structure, const std::string& path) {
  detail::write_file(path, trajectory_csv(traj, structure));
}

inline nlohmann::json to_json(const HypothesisReport& r) {
  nlohmann::json j;
  j["theorem"] = r.theorem;
  if (!r.subject.empty()) j["subject"] = r.subject;
  j["verdict"] = std::string(to_string(r.verdict));
  j["window"] = {r.window_begin, r.window_end};
  j["counterexample_step"] = r.counterexample_step ? nlohmann::json(*r.counterexample_step) : nlohmann::json();
  j["scalars"] = r.scalars;
  j["flags"] = r.flags;
  j["note"] = r.note;
  j["series"] = r.series;
  return j;
}

inline nlohmann::json metrics_json(const Trajectory& traj, const Scenario& scenario,
                                   const std::vector<HypothesisReport>& reports, std::string_view name = {}) {
  const auto& s = scenario.structure;
  nlohmann::json j;
  j["scenario"] = std::string(name);
  j["n_agents"] = s.n_agents;
  j["dimension"] = s.dim();
  j["mode"] = std::string(to_string(scenario.params.mode));
  j["seed"] = scenario.key.seed;
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : s.leader_groups) groups.push_back({{"name", g.name}, {"size", g.members.size()}, {"target", g.target}});
  j["leader_groups"] = groups;
  j["followers"] = s.followers.size();
  j["terminal_reason"] = std::string(to_string(traj.terminal));
  j["final_t"] = traj.final_t();

  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); };
  nlohmann::json steps = nlohmann::json::array();
  steps.push_back({{"t", traj.snapshots.front().t},
                   {"leader_distance", traj.initial_leader_distance},
                   {"follower_distance", traj.initial_follower_distance}});
  for (const auto& rec : traj.metrics) {
    nlohmann::json step;
    step["t"] = rec.t + 1;
    step["leader_distance"] = rec.leader_distance;
    step["follower_distance"] = rec.follower_distance;
    step["max_alpha"] = rec.max_alpha;
    step["max_follower_self_weight"] = opt(rec.max_follower_self_weight);
    step["displacement"] = rec.displacement;
    step["limit_gap"] = opt(rec.limit_gap);
    step["followers_see_group"] = rec.connectivity.followers_see_group;
    step["followers_see_whole_group"] = rec.connectivity.followers_see_whole_group;
    step["cross_group_influence"] = rec.connectivity.cross_group_influence;
    step["zeroed_betas"] = rec.zeroed_betas;
    step["legacy_reallocations"] = rec.legacy_reallocations;
    steps.push_back(std::move(step));
  }
  j["steps"] = std::move(steps);

  nlohmann::json reps = nlohmann::json::array();
  for (const auto& r : reports) reps.push_back(to_json(r));
  j["reports"] = std::move(reps);
  return j;
}

inline void write_metrics(const Trajectory& traj, const Scenario& scenario,
                          const std::vector<HypothesisReport>& reports, const std::string& path,
                          std::string_view name = {}) {
  detail::write_file(path, metrics_json(traj, scenario, reports, name).dump(1) + "\n");
}

// ---------------------------------------------------------------------------

struct TrajectoryRow {
  std::uint64_t t{0};
  Index agent{0};
  std::string group;
  std::string role;
  std::vector<double> x;

  bool operator==(const TrajectoryRow&) const = default;
};

/// Parses trajectory CSV text. `origin` names the source in error messages.
inline std::vector<TrajectoryRow> parse_trajectory_csv(std::string_view text, const std::string& origin = "<csv>") {
  std::vector<TrajectoryRow> rows;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  std::size_t start = 0;
  auto fail = [&](const std::string& what) {
    throw ValidationError(origin + ":" + std::to_string(line_no) + ": " + what);
  };
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto fields = detail::split(line, ',');
    if (line_no == 1) {
      if (fields.size() < 5 || fields[0] != "t" || fields[1] != "agent" || fields[2] != "group" || fields[3] != "role")
        fail("expected header t,agent,group,role,x0,...");
      dim = fields.size() - 4;
      for (std::size_t c = 0; c < dim; ++c)
        if (fields[4 + c] != "x" + std::to_string(c)) fail("unexpected column '" + std::string(fields[4 + c]) + "'");
      continue;
    }
    if (fields.size() != dim + 4) fail("expected " + std::to_string(dim + 4) + " fields");
    TrajectoryRow row;
    auto parse_int = [&](std::string_view f, auto& v) {
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size()) fail("bad integer '" + std::string(f) + "'");
    };
    parse_int(fields[0], row.t);
    parse_int(fields[1], row.agent);
    row.group = std::string(fields[2]);
    row.role = std::string(fields[3]);
    for (std::size_t c = 0; c < dim; ++c) {
      double v = 0.0;
      const auto f = fields[4 + c];
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size()) fail("bad number '" + std::string(f) + "'");
      row.x.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (line_no == 0) throw ValidationError(origin + ": empty trajectory file");
  return rows;
}

inline std::vector<TrajectoryRow> read_trajectory(const std::string& path) {
  return parse_trajectory_csv(detail::read_file(path), path);
}

/// Long format, one row per (agent, coordinate, t): the per-agent time series
/// that opinion-versus-time plots draw.
inline std::string plot_data_csv(std::vector<TrajectoryRow> rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const TrajectoryRow& a, const TrajectoryRow& b) {
    return a.agent != b.agent ? a.agent < b.agent : a.t < b.t;
  });
  std::string out = "agent,group,role,coord,t,value\n";
  std::size_t i = 0;
  while (i < rows.size()) {
    std::size_t j = i;
    while (j < rows.size() && rows[j].agent == rows[i].agent) ++j;
    for (std::size_t c = 0; c < rows[i].x.size(); ++c)
      for (std::size_t r = i; r < j; ++r) {
        out += std::to_string(rows[r].agent) + "," + rows[r].group + "," + rows[r].role + "," + std::to_string(c) +
               "," + std::to_string(rows[r].t) + ",";
        detail::append_double(out, rows[r].x[c]);
        out += '\n';
      }
    i = j;
  }
  return out;
}

inline std::string read_text_file(const std::string& path) { return detail::read_file(path); }
inline void write_text_file(const std::string& path, std::string_view content) { detail::write_file(path, content); }

}  // namespace lfdyn
