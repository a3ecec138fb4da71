#pragma once

// Umbrella header for the TwiCs simulation and design engine.

#include "twics/cohort.hpp"
#include "twics/design.hpp"
#include "twics/error.hpp"
#include "twics/estimators.hpp"
#include "twics/linreg.hpp"
#include "twics/parallel.hpp"
#include "twics/population.hpp"
#include "twics/randomization.hpp"
#include "twics/report.hpp"
#include "twics/rng.hpp"
#include "twics/runner.hpp"
#include "twics/scenario.hpp"
#include "twics/stats.hpp"
#include "twics/trial.hpp"
#include "twics/version.hpp"
