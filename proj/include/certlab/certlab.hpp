#pragma once

// Umbrella header for the certlab library.

#include "certlab/certificates.hpp"
#include "certlab/errors.hpp"
#include "certlab/experiments.hpp"
#include "certlab/gaussian.hpp"
#include "certlab/json_io.hpp"
#include "certlab/linalg.hpp"
#include "certlab/losses.hpp"
#include "certlab/random.hpp"
#include "certlab/regularizers.hpp"
#include "certlab/rsc.hpp"
#include "certlab/solvers.hpp"
