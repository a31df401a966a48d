#pragma once

#include "bounds.hpp"
#include "core_trees.hpp"
#include "enumeration.hpp"
#include "error.hpp"
#include "exact.hpp"
#include "harness.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "samplers.hpp"
#include "simply_generated.hpp"
#include "stats.hpp"
