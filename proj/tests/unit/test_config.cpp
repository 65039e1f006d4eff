#include <catch_amalgamated.hpp>

#include <string>

#include "lfdyn/lfdyn.hpp"
#include "support/generators.hpp"

using namespace lfdyn;
using Catch::Matchers::ContainsSubstring;

namespace {

std::string problems_of(std::string_view text) {
  try {
    parse_config(text);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

constexpr std::string_view kMinimal = R"([scenario]
dimension = 1
epsilon = 0.5

[leader_group A]
size = 2
target = 0
init = uniform(-1, 1)

[schedule]
degree = alpha
group = A
spec = constant(0.5)
)";

ScenarioConfig random_config(gen::Rng& rng, int trial) {
  ScenarioConfig c;
  c.name = "cfg" + std::to_string(trial);
  c.dimension = gen::pick(rng, 1, 3);
  c.epsilon = gen::uniform(rng, 0.0, 2.0);
  c.norm = gen::coin(rng) ? Norm::euclidean : Norm::chebyshev;
  c.seed = rng();
  c.termination.max_steps = gen::pick(rng, 0, 100000);
  c.termination.displacement_tol = gen::coin(rng) ? std::optional<double>{gen::uniform(rng, 0.0, 1e-6)} : std::nullopt;
  c.termination.limit_tol = gen::coin(rng) ? std::optional<double>{gen::uniform(rng, 0.0, 1e-3)} : std::nullopt;
  c.snapshot_stride = gen::coin(rng) ? 0 : gen::pick(rng, 1, 50);
  c.neighbor_search = static_cast<NeighborSearch>(gen::pick(rng, 0, 2));
  if (gen::coin(rng)) c.trajectory_path = "out/traj" + std::to_string(trial) + ".csv";
  if (gen::coin(rng)) c.metrics_path = "out/m" + std::to_string(trial) + ".json";

  auto random_init = [&](std::size_t size) -> InitSpec {
    if (gen::coin(rng)) {
      UniformBoxInit u;
      for (std::size_t k = 0; k < c.dimension; ++k) {
        const double a = gen::uniform(rng, -3.0, 3.0), b = gen::uniform(rng, -3.0, 3.0);
        u.lo.push_back(std::min(a, b));
        u.hi.push_back(std::max(a, b));
      }
      return u;
    }
    ExplicitInit e;
    for (std::size_t j = 0; j < size; ++j) {
      Opinion p;
      for (std::size_t k = 0; k < c.dimension; ++k) p.push_back(gen::uniform(rng, -3.0, 3.0));
      e.points.push_back(p);
    }
    return e;
  };

  const std::size_t m = gen::pick(rng, 1, 3);
  for (std::size_t k = 0; k < m; ++k) {
    GroupConfig g;
    g.name = "G" + std::to_string(k);
    g.size = gen::pick(rng, 1, 6);
    for (std::size_t j = 0; j < c.dimension; ++j) g.target.push_back(gen::uniform(rng, -2.0, 2.0));
    g.init = random_init(g.size);
    c.groups.push_back(g);
    ScheduleConfig s;
    s.group = g.name;
    s.spec = gen::random_spec(rng, 1.0);
    c.schedules.push_back(s);
    if (g.size > 1 && gen::coin(rng, 0.3)) {
      s.agents = std::vector<Index>{0};
      s.spec = gen::random_spec(rng, 1.0);
      c.schedules.push_back(s);
    }
  }
  if (gen::coin(rng)) {
    GroupConfig f;
    f.role = GroupRole::followers;
    f.name = "F";
    f.size = gen::pick(rng, 1, 8);
    f.init = random_init(f.size);
    c.groups.push_back(f);
    const auto caps = gen::random_split(rng, m, gen::uniform(rng, 0.0, 1.0));
    for (std::size_t k = 0; k < m; ++k)
      if (caps[k] > 0.0) c.schedules.push_back({DegreeKind::beta, "G" + std::to_string(k), std::nullopt,
                                                gen::random_spec(rng, caps[k])});
  }
  if (gen::coin(rng, 0.3)) {
    // Interleaved explicit membership.
    std::vector<Index> ids(c.n_agents());
    std::iota(ids.begin(), ids.end(), 0);
    std::shuffle(ids.begin(), ids.end(), rng);
    std::size_t at = 0;
    for (auto& g : c.groups) {
      g.members = std::vector<Index>(ids.begin() + static_cast<long>(at), ids.begin() + static_cast<long>(at + g.size));
      at += g.size;
    }
  }
  return c;
}

}  // namespace

TEST_CASE("figure1 preset matches the published setup", "[config]") {
  const auto c = parse_config(kFigure1Preset);
  REQUIRE(c.groups.size() == 1);
  CHECK(c.groups[0].role == GroupRole::leader);
  CHECK(c.groups[0].size == 100);
  CHECK(c.groups[0].target == Opinion{1.0});
  CHECK(std::get<UniformBoxInit>(c.groups[0].init) == UniformBoxInit{{-1.0}, {0.0}});
  CHECK(c.epsilon == 0.05);
  REQUIRE(c.schedules.size() == 1);
  const auto mix = std::get<BernoulliMixRule>(c.schedules[0].spec);
  CHECK(mix.value_a == 0.99);
  CHECK(mix.value_b == 1.0);
  CHECK(mix.prob_a == 1.0 / 3.0);
  CHECK(c.termination.max_steps == 10000);
}

TEST_CASE("figure2 preset matches the published setup", "[config]") {
  const auto c = parse_config(kFigure2Preset);
  REQUIRE(c.groups.size() == 2);
  CHECK(c.groups[0].size == 2);
  CHECK(std::get<ExplicitInit>(c.groups[0].init).points == std::vector<Opinion>{{0.99}, {-0.99}});
  CHECK(c.groups[0].target == Opinion{0.0});
  CHECK(c.groups[1].role == GroupRole::followers);
  CHECK(c.groups[1].size == 100);
  CHECK(std::get<UniformBoxInit>(c.groups[1].init) == UniformBoxInit{{0.5}, {1.0}});
  CHECK(c.epsilon == 1.0);
  CHECK(std::get<ConstantRule>(c.schedules[0].spec).value == 0.99);
  CHECK(c.schedules[1].degree == DegreeKind::beta);
  CHECK(std::get<ConstantRule>(c.schedules[1].spec).value == 0.01);
  CHECK(c.termination.max_steps == 5000);
}

TEST_CASE("preset files on disk equal the built-in presets", "[config]") {
  for (const auto& p : kPresets) {
    const std::string path = std::string(LFDYN_SOURCE_DIR) + "/presets/" + std::string(p.name) + ".cfg";
    CHECK(parse_config(read_text_file(path)) == parse_config(p.text));
    REQUIRE(preset_text(p.name).has_value());
  }
  CHECK_FALSE(preset_text("nope").has_value());
}

TEST_CASE("negative epsilon names the key and line", "[config]") {
  std::string text(kMinimal);
  text.replace(text.find("epsilon = 0.5"), 13, "epsilon = -1");
  const auto msg = problems_of(text);
  CHECK_THAT(msg, ContainsSubstring("epsilon"));
  CHECK_THAT(msg, ContainsSubstring("line 3"));
}

TEST_CASE("parse errors are anchored to lines", "[config]") {
  CHECK_THAT(problems_of("[scenario]\ndimension = 1\nepsilon = 1\ncolour = red\n"), ContainsSubstring("line 4"));
  CHECK_THAT(problems_of("[scenario]\ndimension = 1\ndimension = 2\nepsilon = 1\n"), ContainsSubstring("line 3"));
  CHECK_THAT(problems_of("[bogus]\n"), ContainsSubstring("unknown section"));
  CHECK_THAT(problems_of(std::string(kMinimal) + "\n[leader_group B]\nsize = 1\ntarget = 1\ninit = explicit(0)\n"),
             ContainsSubstring("alpha schedule"));
  std::string bad_spec(kMinimal);
  bad_spec.replace(bad_spec.find("constant(0.5)"), 13, "constant(1.5)");
  CHECK_THAT(problems_of(bad_spec), ContainsSubstring("line 13"));
  CHECK(problems_of(kMinimal).empty());
}

TEST_CASE("fractions, ranges and broadcast bounds", "[config]") {
  const auto c = parse_config(R"([scenario]
dimension = 2
epsilon = 1/4

[leader_group A]
members = 0..2, 5
target = [0, 1]
init = uniform(-1, 1)

[followers]
members = 3, 4
init = explicit([0, 0], [1, 1])

[schedule]
degree = alpha
group = A
spec = formula(c_over_t_plus_2, 2)
)");
  CHECK(c.epsilon == 0.25);
  CHECK(c.groups[0].size == 4);
  CHECK(*c.groups[0].members == std::vector<Index>{0, 1, 2, 5});
  CHECK(std::get<UniformBoxInit>(c.groups[0].init) == UniformBoxInit{{-1.0, -1.0}, {1.0, 1.0}});
  const Scenario sc = build_scenario(c);
  CHECK(sc.structure.followers == std::vector<Index>{3, 4});
  CHECK(sc.initial.opinions.row(4)[1] == 1.0);
}

TEST_CASE("beta worst case above one is rejected", "[config]") {
  const auto msg = problems_of(R"([scenario]
dimension = 1
epsilon = 1

[leader_group A]
size = 1
target = 0
init = explicit(0)

[leader_group B]
size = 1
target = 1
init = explicit(1)

[followers]
size = 1
init = explicit(0.5)

[schedule]
degree = alpha
group = A
spec = constant(0.5)

[schedule]
degree = alpha
group = B
spec = constant(0.5)

[schedule]
degree = beta
group = A
spec = bernoulli_mix(0.7, 0.1, 0.5)

[schedule]
degree = beta
group = B
spec = uniform(0, 0.4)
)");
  CHECK_THAT(msg, ContainsSubstring("worst-case"));
}

TEST_CASE("legacy mode shape rules", "[config][legacy]") {
  const std::string base = R"([scenario]
dimension = 1
epsilon = 0.5
mode = legacy

[leader_group P]
size = 2
target = 0.8
init = uniform(0, 1)

[leader_group N]
size = 2
target = -0.8
init = uniform(-1, 0)

[followers]
size = 3
init = uniform(-1, 1)
epsilons = 0.1, 0.2, 0.3

[schedule]
degree = weight
group = P
spec = constant(0.3)

[schedule]
degree = weight
group = N
spec = constant(0.3)
)";
  const auto c = parse_config(base);
  const Scenario sc = build_scenario(c);
  CHECK(sc.params.agent_epsilon == std::vector<double>{0.5, 0.5, 0.5, 0.5, 0.1, 0.2, 0.3});

  std::string two_d = base;
  two_d.replace(two_d.find("dimension = 1"), 13, "dimension = 2");
  CHECK_THAT(problems_of(two_d), ContainsSubstring("dimension = 1"));
  std::string flipped = base;
  flipped.replace(flipped.find("target = 0.8"), 12, "target = -0.2");
  CHECK_THAT(problems_of(flipped), ContainsSubstring("[0, 1]"));
  std::string alpha = base;
  alpha.replace(alpha.find("degree = weight"), 15, "degree = alpha");
  CHECK_THAT(problems_of(alpha), ContainsSubstring("not used in legacy"));
}

TEST_CASE("overlapping members are reported", "[config]") {
  const auto msg = problems_of(R"([scenario]
dimension = 1
epsilon = 1

[leader_group L]
members = 0, 1, 2
target = 0
init = uniform(0, 1)

[followers]
members = 2, 3
init = uniform(0, 1)

[schedule]
degree = alpha
group = L
spec = constant(0.5)
)");
  CHECK_THAT(msg, ContainsSubstring("overlap: agent 2"));
}

TEST_CASE("seeded uniform initial opinions are reproducible and in range", "[config]") {
  auto c = parse_config(kFigure2Preset);
  const auto a = build_scenario(c);
  const auto b = build_scenario(c);
  CHECK(bitwise_equal(a.initial.opinions, b.initial.opinions));
  for (Index i : a.structure.followers) {
    CHECK(a.initial.opinions.row(i)[0] >= 0.5);
    CHECK(a.initial.opinions.row(i)[0] < 1.0);
  }
  c.seed = 1;
  CHECK_FALSE(bitwise_equal(build_scenario(c).initial.opinions, a.initial.opinions));
}

TEST_CASE("write_config then parse_config is the identity", "[config][property]") {
  gen::Rng rng(71);
  for (int trial = 0; trial < 200; ++trial) {
    const auto c = random_config(rng, trial);
    REQUIRE(validate_config(c).empty());
    const std::string text = write_config(c);
    const auto back = parse_config(text);
    CHECK(back == c);
    CHECK(write_config(back) == text);
  }
}
