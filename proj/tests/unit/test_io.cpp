#include <catch_amalgamated.hpp>

#include <filesystem>

#include "lfdyn/lfdyn.hpp"
#include "support/generators.hpp"

using namespace lfdyn;
using Catch::Matchers::ContainsSubstring;
namespace fs = std::filesystem;

namespace {

Scenario pair_scenario(std::uint64_t steps) {
  Scenario sc;
  sc.structure.n_agents = 2;
  sc.structure.followers = {1};
  sc.structure.leader_groups = {{"L", {0}, {0.0}}};
  sc.params.epsilon = 1.0;
  sc.schedules = {{DegreeKind::alpha, 0, std::nullopt, ConstantRule{0.5}},
                  {DegreeKind::beta, 0, std::nullopt, ConstantRule{0.5}}};
  sc.initial = {0, OpinionMatrix::from_rows({{0.4}, {0.8}})};
  sc.termination = {steps, std::nullopt, std::nullopt};
  return sc;
}

fs::path scratch(const std::string& leaf) {
  const fs::path dir = fs::temp_directory_path() / "lfdyn_test_io" / leaf;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("two agents, one step: four rows", "[io]") {
  const Scenario sc = pair_scenario(1);
  const auto traj = run(sc);
  const auto rows = parse_trajectory_csv(trajectory_csv(traj, sc.structure));
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == TrajectoryRow{0, 0, "L", "leader", {0.4}});
  CHECK(rows[1] == TrajectoryRow{0, 1, "F", "follower", {0.8}});
  CHECK(rows[2].t == 1);
  CHECK(rows[2].x[0] == 0.5 * 0.4 + 0.5 * 0.0);
  CHECK(rows[3].x[0] == 0.5 * 0.8 + 0.5 * 0.4);
  CHECK(trajectory_csv(traj, sc.structure).rfind("t,agent,group,role,x0\n", 0) == 0);
}

TEST_CASE("zero steps writes only the initial snapshot", "[io]") {
  const Scenario sc = pair_scenario(0);
  const auto rows = parse_trajectory_csv(trajectory_csv(run(sc), sc.structure));
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) CHECK(r.t == 0);
}

TEST_CASE("row count is snapshots times agents; values round-trip exactly", "[io][property]") {
  gen::Rng rng(81);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t d = gen::pick(rng, 1, 3);
    const std::size_t m = gen::pick(rng, 1, 2);
    Scenario sc;
    sc.structure = gen::random_structure(rng, gen::pick(rng, m, 8), gen::pick(rng, 0, 8), m, d);
    sc.params.epsilon = gen::uniform(rng, 0.1, 1.0);
    sc.schedules = gen::random_bindings(rng, sc.structure);
    sc.initial = {0, gen::random_opinions(rng, sc.structure.n_agents, d, -1.0, 1.0)};
    sc.termination = {gen::pick(rng, 0, 30), std::nullopt, std::nullopt};
    sc.snapshot_stride = gen::pick(rng, 1, 7);
    sc.key = RngKey{static_cast<std::uint64_t>(trial)};
    const auto traj = run(sc);
    const auto rows = parse_trajectory_csv(trajectory_csv(traj, sc.structure));
    REQUIRE(rows.size() == traj.snapshots.size() * sc.structure.n_agents);
    std::size_t r = 0;
    for (const auto& snap : traj.snapshots)
      for (Index i = 0; i < sc.structure.n_agents; ++i, ++r) {
        CHECK(rows[r].t == snap.t);
        CHECK(rows[r].agent == i);
        for (std::size_t c = 0; c < d; ++c) CHECK(rows[r].x[c] == snap.opinions.row(i)[c]);
      }
  }
}

TEST_CASE("metrics json for the two-leader layout", "[io]") {
  auto config = parse_config(kFigure2Preset);
  const Scenario sc = build_scenario(config);
  const auto traj = run(sc);
  const auto reports = hypothesis_reports(sc, traj);
  const auto j = metrics_json(traj, sc, reports, "figure2");
  CHECK(j["scenario"] == "figure2");
  CHECK(j["n_agents"] == 102);
  const auto& steps = j["steps"];
  REQUIRE(steps.size() == traj.metrics.size() + 1);
  CHECK(steps[0]["t"] == 0);
  CHECK(steps.back()["t"] == 5000);
  CHECK(steps.back()["leader_distance"][0].get<double>() < 1e-3);
  CHECK(steps.back()["follower_distance"][0].get<double>() < 1e-3);
  CHECK(j["reports"][1]["theorem"] == "2");
  CHECK(j["reports"][1]["verdict"] == "verified-on-window");
  // Doubles survive a dump/parse cycle unchanged.
  const auto back = nlohmann::json::parse(j.dump());
  CHECK(back["steps"][17]["displacement"].get<double>() == traj.metrics[16].displacement);
}

TEST_CASE("plot data is per-agent long format", "[io]") {
  const Scenario sc = pair_scenario(2);
  const auto rows = parse_trajectory_csv(trajectory_csv(run(sc), sc.structure));
  const std::string plot = plot_data_csv(rows);
  const auto lines = parse_trajectory_csv("t,agent,group,role,x0\n");
  CHECK(lines.empty());
  CHECK(plot.rfind("agent,group,role,coord,t,value\n0,L,leader,0,0,0.40000000000000002\n0,L,leader,0,1,", 0) == 0);
  CHECK(std::count(plot.begin(), plot.end(), '\n') == 7);
}

TEST_CASE("I/O failures name the path", "[io]") {
  const std::string missing = "/nonexistent-dir/for/lfdyn/traj.csv";
  try {
    read_trajectory(missing);
    FAIL("expected failure");
  } catch (const RuntimeFailure& e) {
    CHECK_THAT(e.what(), ContainsSubstring(missing));
  }
  const Scenario sc = pair_scenario(1);
  CHECK_THROWS_WITH(write_trajectory(run(sc), sc.structure, missing), ContainsSubstring(missing));
  CHECK_THROWS_AS(parse_trajectory_csv("time,agent\n1,2\n", "bad.csv"), ValidationError);
  CHECK_THROWS_WITH(parse_trajectory_csv("t,agent,group,role,x0\n0,0,L,leader,abc\n", "bad.csv"),
                    ContainsSubstring("bad.csv:2"));
}

TEST_CASE("sweep results do not depend on the worker count", "[io][sweep]") {
  auto config = parse_config(kFigure2Preset);
  config.termination.max_steps = 300;
  const auto d1 = scratch("w1");
  const auto d4 = scratch("w4");
  SweepOptions one{0, 5, 1, 1e-3, d1.string()};
  SweepOptions four{0, 5, 4, 1e-3, d4.string()};
  const auto a = sweep(config, one);
  const auto b = sweep(config, four);
  CHECK(to_json(a, 1e-3).dump() == to_json(b, 1e-3).dump());
  for (int seed = 0; seed <= 5; ++seed) {
    const std::string leaf = "trajectory_seed" + std::to_string(seed) + ".csv";
    CHECK(read_text_file((d1 / leaf).string()) == read_text_file((d4 / leaf).string()));
  }
  REQUIRE(a.runs.size() == 6);
  CHECK(a.runs[3].seed == 3);
  CHECK_THROWS_AS(sweep(config, SweepOptions{5, 4, 1, 1e-6, ""}), ValidationError);
}
