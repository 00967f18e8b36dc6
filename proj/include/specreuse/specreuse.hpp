#pragma once

#include "specreuse/emission.hpp"
#include "specreuse/hmm.hpp"
#include "specreuse/markov.hpp"
#include "specreuse/metrics.hpp"
#include "specreuse/numeric.hpp"
#include "specreuse/policy.hpp"
#include "specreuse/rng.hpp"
#include "specreuse/sim.hpp"
