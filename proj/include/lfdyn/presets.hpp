#pragma once

// Built-in scenarios. The same text ships as presets/*.cfg.

#include <array>
#include <optional>
#include <string_view>

namespace lfdyn {

// One leader group of 100 agents drifting from [-1, 0] to the target 1.
// Each agent keeps weight 1 on its neighbors with probability 2/3 and 0.99
// otherwise, independently per step.
inline constexpr std::string_view kFigure1Preset = R"([scenario]
name = figure1
dimension = 1
epsilon = 0.05
norm = euclidean
mode = mixed
seed = 0
max_steps = 10000
tol_displacement = none
tol_limit = none
snapshot_stride = auto
neighbor_search = auto

[leader_group L]
size = 100
target = 1
init = uniform(-1, 0)

[schedule]
degree = alpha
group = L
spec = bernoulli_mix(0.99, 1, 1/3)
)";

// Two leaders at +-0.99 with target 0 pull 100 followers from [0.5, 1].
inline constexpr std::string_view kFigure2Preset = R"([scenario]
name = figure2
dimension = 1
epsilon = 1
norm = euclidean
mode = mixed
seed = 0
max_steps = 5000
tol_displacement = none
tol_limit = none
snapshot_stride = auto
neighbor_search = auto

[leader_group L]
size = 2
target = 0
init = explicit(0.99, -0.99)

[followers]
size = 100
init = uniform(0.5, 1)

[schedule]
degree = alpha
group = L
spec = constant(0.99)

[schedule]
degree = beta
group = L
spec = constant(0.01)
)";

struct Preset {
  std::string_view name;
  std::string_view text;
};

inline constexpr std::array<Preset, 2> kPresets{{{"figure1", kFigure1Preset}, {"figure2", kFigure2Preset}}};

inline std::optional<std::string_view> preset_text(std::string_view name) {
  for (const auto& p : kPresets)
    if (p.name == name) return p.text;
  return std::nullopt;
}

}  // namespace lfdyn
