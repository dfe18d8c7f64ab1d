#pragma once

// Umbrella header: the full DBCE solver library.

#include "baselines.hpp"
#include "dbcpi.hpp"
#include "density.hpp"
#include "environments.hpp"
#include "experiment.hpp"
#include "json_io.hpp"
#include "linalg.hpp"
#include "linprog.hpp"
#include "markov_game.hpp"
#include "occupancy.hpp"
#include "policy_eval.hpp"
#include "random.hpp"
#include "stage_lp.hpp"
#include "trajectory.hpp"
