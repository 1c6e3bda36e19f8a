// Umbrella header for the bulk-surface reaction-diffusion library.
#pragma once

#include "conditions.hpp"
#include "diagnostics.hpp"
#include "mesh.hpp"
#include "network.hpp"
#include "output.hpp"
#include "scenario.hpp"
#include "solver.hpp"
#include "state.hpp"
