#pragma once

#include "lfdyn/analysis.hpp"
#include "lfdyn/config.hpp"
#include "lfdyn/engine.hpp"
#include "lfdyn/errors.hpp"
#include "lfdyn/io.hpp"
#include "lfdyn/metrics.hpp"
#include "lfdyn/model.hpp"
#include "lfdyn/neighbors.hpp"
#include "lfdyn/opinion.hpp"
#include "lfdyn/parallel.hpp"
#include "lfdyn/philox.hpp"
#include "lfdyn/presets.hpp"
#include "lfdyn/schedules.hpp"
#include "lfdyn/sweep.hpp"
