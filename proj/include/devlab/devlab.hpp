#pragma once

#include "devlab/adjacent_ones.hpp"
#include "devlab/alternating.hpp"
#include "devlab/core.hpp"
#include "devlab/deviations.hpp"
#include "devlab/errors.hpp"
#include "devlab/exact_oracle.hpp"
#include "devlab/likelihood.hpp"
#include "devlab/montecarlo.hpp"
#include "devlab/numeric.hpp"
#include "devlab/random_walk.hpp"
#include "devlab/rng.hpp"
#include "devlab/single_bit.hpp"
