#pragma once

#include "mscrowd/vec2.hpp"
#include "mscrowd/geometry.hpp"
#include "mscrowd/measures.hpp"
#include "mscrowd/neighbor_grid.hpp"
#include "mscrowd/interaction.hpp"
#include "mscrowd/desired_velocity.hpp"
#include "mscrowd/parallel.hpp"
#include "mscrowd/stepper.hpp"
#include "mscrowd/diagnostics.hpp"
#include "mscrowd/snapshot_io.hpp"
#include "mscrowd/scenario.hpp"
#include "mscrowd/scenario_io.hpp"
#include "mscrowd/simulation.hpp"
#include "mscrowd/convergence.hpp"
