#pragma once

#include "cpc/basis.hpp"
#include "cpc/bench.hpp"
#include "cpc/checks.hpp"
#include "cpc/data.hpp"
#include "cpc/dcor.hpp"
#include "cpc/errors.hpp"
#include "cpc/experiments.hpp"
#include "cpc/mlp.hpp"
#include "cpc/models.hpp"
#include "cpc/quadratic.hpp"
#include "cpc/rank.hpp"
#include "cpc/rng.hpp"
#include "cpc/sim.hpp"
#include "cpc/split.hpp"
#include "cpc/test.hpp"
