#pragma once

#include "dsmflow/densities.hpp"
#include "dsmflow/divergences.hpp"
#include "dsmflow/error.hpp"
#include "dsmflow/expectation.hpp"
#include "dsmflow/experiments.hpp"
#include "dsmflow/flows.hpp"
#include "dsmflow/io.hpp"
#include "dsmflow/ode_dsm.hpp"
#include "dsmflow/pushforward.hpp"
#include "dsmflow/rng.hpp"
#include "dsmflow/special.hpp"
