#pragma once

#include "netspill/commands.hpp"
#include "netspill/design.hpp"
#include "netspill/error.hpp"
#include "netspill/estimator.hpp"
#include "netspill/exposure.hpp"
#include "netspill/graph.hpp"
#include "netspill/linalg.hpp"
#include "netspill/montecarlo.hpp"
#include "netspill/rng.hpp"
#include "netspill/spec_io.hpp"
#include "netspill/variance.hpp"
