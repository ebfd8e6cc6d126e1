#pragma once

#include "lowrank/errors.hpp"
#include "lowrank/linalg.hpp"
#include "lowrank/operators.hpp"
#include "lowrank/solvers.hpp"
#include "lowrank/experiments.hpp"
#include "lowrank/io.hpp"
#include "lowrank/config.hpp"
