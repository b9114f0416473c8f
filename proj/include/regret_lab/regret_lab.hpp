#pragma once

#include "regret_lab/agent.hpp"
#include "regret_lab/bounds.hpp"
#include "regret_lab/diagnostics.hpp"
#include "regret_lab/env_zoo.hpp"
#include "regret_lab/errors.hpp"
#include "regret_lab/harness.hpp"
#include "regret_lab/mdp.hpp"
#include "regret_lab/mdp_io.hpp"
#include "regret_lab/random.hpp"
#include "regret_lab/verify.hpp"
