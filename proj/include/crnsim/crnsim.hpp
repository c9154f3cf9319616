#pragma once

#include "crnsim/channel.hpp"
#include "crnsim/config.hpp"
#include "crnsim/controller.hpp"
#include "crnsim/estimator.hpp"
#include "crnsim/metrics.hpp"
#include "crnsim/network.hpp"
#include "crnsim/riccati.hpp"
#include "crnsim/rng.hpp"
#include "crnsim/sim.hpp"
#include "crnsim/sir_dynamics.hpp"
#include "crnsim/types.hpp"
