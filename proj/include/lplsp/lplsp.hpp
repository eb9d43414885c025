#pragma once

// Umbrella header. Core model and estimation only; dataio/plot/cli are
// included separately by consumers that need files or figures.

#include "lplsp/errors.hpp"
#include "lplsp/estimation.hpp"
#include "lplsp/forward.hpp"
#include "lplsp/parameterization.hpp"
#include "lplsp/rng.hpp"
#include "lplsp/solver.hpp"
#include "lplsp/synthdata.hpp"
#include "lplsp/types.hpp"
