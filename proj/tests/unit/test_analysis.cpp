#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "lfdyn/lfdyn.hpp"
#include "support/generators.hpp"

using namespace lfdyn;
using Catch::Matchers::WithinAbs;

namespace {

Scenario figure2(std::uint64_t steps) {
  auto config = parse_config(kFigure2Preset);
  config.termination.max_steps = steps;
  return build_scenario(config);
}

Scenario two_groups(double g0, double g1, double eps) {
  Scenario sc;
  sc.structure.n_agents = 6;
  sc.structure.followers = {4, 5};
  sc.structure.leader_groups = {{"A", {0, 1}, {g0}}, {"B", {2, 3}, {g1}}};
  sc.params.epsilon = eps;
  sc.schedules = {{DegreeKind::alpha, 0, std::nullopt, ConstantRule{0.8}},
                  {DegreeKind::alpha, 1, std::nullopt, ConstantRule{0.8}},
                  {DegreeKind::beta, 0, std::nullopt, ConstantRule{0.1}},
                  {DegreeKind::beta, 1, std::nullopt, ConstantRule{0.1}}};
  const double r = 0.4 * eps;
  sc.initial = {0, OpinionMatrix::from_rows({{g0 - r}, {g0 + r}, {g1 - r}, {g1 + r}, {g0 + 0.5 * r}, {g1 - 0.5 * r}})};
  sc.termination = {300, std::nullopt, std::nullopt};
  return sc;
}

DegreeHistory flat_history(double alpha, std::size_t steps) {
  DegreeHistory h;
  h.max_alpha.assign(steps, alpha);
  h.max_alpha_all_groups = h.max_alpha;
  return h;
}

}  // namespace

TEST_CASE("distance-to-target examples", "[analysis]") {
  GroupStructure s;
  s.n_agents = 4;
  s.followers = {2, 3};
  s.leader_groups = {{"L", {0, 1}, {0.0}}};
  const auto at_target = OpinionMatrix::from_rows({{0.0}, {0.0}, {0.0}, {0.0}});
  CHECK(*leader_distance(at_target, s, 0, Norm::euclidean) == 0.0);
  const auto x = OpinionMatrix::from_rows({{0.99}, {-0.99}, {0.5}, {1.0}});
  CHECK(*leader_distance(x, s, 0, Norm::euclidean) == 0.99);
  CHECK(*follower_distance(x, s, s.leader_groups[0].target, Norm::euclidean) == 1.0);
  GroupStructure none = s;
  none.followers.clear();
  none.n_agents = 2;
  CHECK_FALSE(follower_distance(x, none, s.leader_groups[0].target, Norm::euclidean).has_value());
}

TEST_CASE("predicted follower limit", "[analysis]") {
  const std::vector<Opinion> one{{0.0}};
  CHECK(*predicted_follower_limit(std::vector<double>{0.01}, one) == Opinion{0.0});
  const std::vector<Opinion> two{{0.0}, {1.0}};
  CHECK(*predicted_follower_limit(std::vector<double>{0.25, 0.25}, two) == Opinion{0.5});
  CHECK_FALSE(predicted_follower_limit(std::vector<double>{0.0, 0.0}, two).has_value());

  // Independent evaluation of the weighted mean.
  const std::vector<Opinion> pm{{-1.0}, {1.0}};
  const double expected = (0.01 * -1.0 + 0.03 * 1.0) / (0.01 + 0.03);
  CHECK_THAT((*predicted_follower_limit(std::vector<double>{0.01, 0.03}, pm))[0], WithinAbs(expected, 1e-15));
  CHECK_THAT(expected, WithinAbs(0.5, 1e-15));
}

TEST_CASE("predicted limit lies in the target hull and ignores ordering", "[analysis][property]") {
  gen::Rng rng(61);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t m = gen::pick(rng, 1, 5);
    const std::size_t d = gen::pick(rng, 1, 3);
    std::vector<Opinion> targets(m, Opinion(d));
    for (auto& g : targets)
      for (double& v : g) v = gen::uniform(rng, -3.0, 3.0);
    auto beta = gen::random_split(rng, m, gen::uniform(rng, 0.01, 1.0));
    beta[gen::pick(rng, 0, m - 1)] += 1e-3;
    const auto limit = predicted_follower_limit(beta, targets);
    REQUIRE(limit.has_value());
    for (std::size_t c = 0; c < d; ++c) {
      double lo = targets[0][c], hi = targets[0][c];
      for (const auto& g : targets) {
        lo = std::min(lo, g[c]);
        hi = std::max(hi, g[c]);
      }
      CHECK((*limit)[c] >= lo - 1e-12);
      CHECK((*limit)[c] <= hi + 1e-12);
    }
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> pb;
    std::vector<Opinion> pt;
    for (std::size_t k : perm) {
      pb.push_back(beta[k]);
      pt.push_back(targets[k]);
    }
    const auto permuted = predicted_follower_limit(pb, pt);
    for (std::size_t c = 0; c < d; ++c) CHECK_THAT((*permuted)[c], WithinAbs((*limit)[c], 1e-12));
  }
}

TEST_CASE("group contraction check", "[analysis]") {
  CHECK(check_theorem1(flat_history(0.9, 100), {0.95, 0.01}).verdict == Verdict::verified_on_window);
  const auto stuck = check_theorem1(flat_history(1.0, 100));
  CHECK(stuck.verdict == Verdict::undecidable);
  CHECK_FALSE(stuck.flags.at("group_condition_on_window"));
  CHECK_THROWS_AS(check_theorem1(DegreeHistory{}), ValidationError);
  CHECK_THROWS_AS(check_theorem1(flat_history(0.5, 3), {1.0, 0.01}), ValidationError);
}

TEST_CASE("random mix schedule: group maximum stays at 1, each agent recurs", "[analysis]") {
  Scenario sc;
  sc.structure.n_agents = 20;
  sc.structure.leader_groups = {{"L", {}, {1.0}}};
  for (Index i = 0; i < 20; ++i) sc.structure.leader_groups[0].members.push_back(i);
  sc.params.epsilon = 0.05;
  sc.schedules = {{DegreeKind::alpha, 0, std::nullopt, BernoulliMixRule{0.99, 1.0, 1.0 / 3.0}}};
  OpinionMatrix x(20, 1);
  for (Index i = 0; i < 20; ++i) x.row(i)[0] = -1.0 + 0.05 * static_cast<double>(i);
  sc.initial = {0, x};
  sc.termination = {300, std::nullopt, std::nullopt};
  const auto traj = run(sc);
  const auto r = check_theorem1(degree_history(traj, sc.structure, 0));
  CHECK(r.verdict == Verdict::undecidable);
  CHECK(r.flags.at("per_agent_condition_on_window"));
  CHECK(r.scalars.at("per_agent_min_density") > 0.2);
}

TEST_CASE("single-group consensus check on the two-leader layout", "[analysis]") {
  const Scenario sc = figure2(200);
  const auto traj = run(sc);
  const auto r = check_theorem2(sc.initial, sc.params.epsilon, sc.structure.leader_groups[0].target, Norm::euclidean,
                                degree_history(traj, sc.structure, 0));
  CHECK(r.verdict == Verdict::verified_on_window);
  CHECK(r.scalars.at("sup_degree") == 0.99);
  CHECK(r.scalars.at("initial_radius") < 1.0);
}

TEST_CASE("single-group consensus check: boundary and degenerate degrees", "[analysis]") {
  OpinionState start{0, OpinionMatrix::from_rows({{0.0}, {0.5}})};
  const Opinion g{0.0};
  const auto boundary = check_theorem2(start, 0.5, g, Norm::euclidean, flat_history(0.5, 10));
  CHECK(boundary.verdict == Verdict::violated);
  CHECK(boundary.counterexample_step == 0u);

  auto no_pull = flat_history(0.5, 10);
  no_pull.max_follower_self_weight.assign(10, 1.0);
  const auto r = check_theorem2(start, 0.6, g, Norm::euclidean, no_pull);
  CHECK(r.verdict == Verdict::violated);
  CHECK(r.counterexample_step == 0u);
  CHECK(check_theorem2(start, 0.6, g, Norm::euclidean, flat_history(0.5, 10)).verdict ==
        Verdict::verified_on_window);
}

TEST_CASE("separated subsystems", "[analysis]") {
  const auto ok = two_groups(0.0, 1.0, 0.25);
  CHECK(targets_separated(ok.structure, 0.25, Norm::euclidean));
  const auto close = two_groups(0.0, 0.7, 0.25);
  CHECK_FALSE(targets_separated(close.structure, 0.25, Norm::euclidean));
  const auto traj_close = run(close);
  const auto rc = check_corollary2_separation(close.structure, 0.25, Norm::euclidean, traj_close);
  CHECK(rc.verdict == Verdict::violated);
  CHECK_FALSE(rc.flags.at("targets_separated"));

  const auto wide = two_groups(-2.0, 2.0, 0.5);
  const auto traj = run(wide);
  const auto r = check_corollary2_separation(wide.structure, 0.5, Norm::euclidean, traj);
  CHECK(r.verdict == Verdict::verified_on_window);
  CHECK(r.flags.at("no_cross_interaction"));
  CHECK(traj.metrics.back().leader_distance[0] < 1e-6);
  CHECK(traj.metrics.back().leader_distance[1] < 1e-6);

  Scenario single = figure2(5);
  CHECK_THROWS_AS(check_corollary2_separation(single.structure, 1.0, Norm::euclidean, run(single)),
                  ValidationError);
}

TEST_CASE("geometric decay bound", "[analysis]") {
  Scenario jump;
  jump.structure.n_agents = 3;
  jump.structure.leader_groups = {{"L", {0, 1, 2}, {0.3}}};
  jump.params.epsilon = 0.1;
  jump.schedules = {{DegreeKind::alpha, 0, std::nullopt, ConstantRule{0.0}}};
  jump.initial = {0, OpinionMatrix::from_rows({{-1.0}, {0.0}, {2.0}})};
  jump.termination = {3, std::nullopt, std::nullopt};
  CHECK(run(jump).metrics.front().leader_distance[0] == 0.0);

  Scenario one;
  one.structure.n_agents = 1;
  one.structure.leader_groups = {{"L", {0}, {0.0}}};
  one.params.epsilon = 1.0;
  one.schedules = {{DegreeKind::alpha, 0, std::nullopt, ConstantRule{0.9}}};
  one.initial = {0, OpinionMatrix::from_rows({{1.0}})};
  one.termination = {50, std::nullopt, std::nullopt};
  const auto t1 = run(one);
  for (const auto& rec : t1.metrics)
    CHECK_THAT(rec.leader_distance[0], WithinAbs(std::pow(0.9, static_cast<double>(rec.t + 1)), 1e-13));
  const auto g1 = geometric_bound_check(t1, 0, 0.9);
  CHECK(g1.precondition_holds);
  CHECK(g1.bound_holds);

  gen::Rng rng(62);
  Scenario many;
  many.structure = gen::random_structure(rng, 20, 0, 1, 1);
  many.params.epsilon = 0.2;
  many.schedules = {{DegreeKind::alpha, 0, std::nullopt, UniformRule{0.0, 0.9}}};
  many.initial = {0, gen::random_opinions(rng, 20, 1, -1.0, 1.0)};
  many.termination = {200, std::nullopt, std::nullopt};
  const auto g2 = geometric_bound_check(run(many), 0, 0.9);
  CHECK(g2.precondition_holds);
  CHECK(g2.bound_holds);
}

TEST_CASE("one step contracts a leader group by its largest alpha", "[analysis][property]") {
  gen::Rng rng(63);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t d = gen::pick(rng, 1, 3);
    const std::size_t m = gen::pick(rng, 1, 3);
    const auto s = gen::random_structure(rng, gen::pick(rng, m, 20), gen::pick(rng, 0, 10), m, d);
    ModelParams params;
    params.epsilon = gen::uniform(rng, 0.0, 2.0);
    params.norm = gen::coin(rng) ? Norm::euclidean : Norm::chebyshev;
    const OpinionState x{0, gen::random_opinions(rng, s.n_agents, d, -2.0, 2.0)};
    const auto deg = gen::random_degrees(rng, s);
    const auto next = gen::engine_step(x, s, params, deg);
    for (std::size_t k = 0; k < m; ++k) {
      double amax = 0.0;
      for (Index i : s.leader_groups[k].members) amax = std::max(amax, deg.alpha[i]);
      const double before = *leader_distance(x.opinions, s, k, params.norm);
      const double after = *leader_distance(next.opinions, s, k, params.norm);
      CHECK(after <= amax * before + 1e-12);
    }
  }
}

TEST_CASE("hypothesis_reports picks the applicable checks", "[analysis]") {
  const Scenario sc = figure2(50);
  const auto traj = run(sc);
  const auto all = hypothesis_reports(sc, traj);
  std::vector<std::string> ids;
  for (const auto& r : all) ids.push_back(r.theorem);
  CHECK(ids == std::vector<std::string>{"1", "2", "c1"});
  CHECK(all.front().subject == "L");
  CHECK(hypothesis_reports(sc, traj, "2").size() == 1);
  CHECK_THROWS_AS(hypothesis_reports(sc, traj, "c2"), ValidationError);
  CHECK_THROWS_AS(hypothesis_reports(sc, traj, "7"), ValidationError);

  const auto wide = two_groups(-2.0, 2.0, 0.5);
  const auto wt = run(wide);
  ids.clear();
  for (const auto& r : hypothesis_reports(wide, wt)) ids.push_back(r.theorem + r.subject);
  CHECK(ids == std::vector<std::string>{"1A", "1B", "c1", "c2"});
}

TEST_CASE("full visibility persistence", "[analysis]") {
  const Scenario sc = figure2(300);
  const auto traj = run(sc);
  const auto from = persistent_full_visibility_from(traj, 0);
  REQUIRE(from.has_value());
  CHECK(*from > 0u);
  CHECK_FALSE(traj.metrics.front().connectivity.followers_see_whole_group[0]);
}
