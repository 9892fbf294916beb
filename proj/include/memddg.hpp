#pragma once

// Everything in one include.

#include "memddg/error.hpp"
#include "memddg/parallel.hpp"
#include "memddg/mesh.hpp"
#include "memddg/geometry.hpp"
#include "memddg/generators.hpp"
#include "memddg/operators.hpp"
#include "memddg/primitive_check.hpp"
#include "memddg/energy.hpp"
#include "memddg/forces.hpp"
#include "memddg/system.hpp"
#include "memddg/solver.hpp"
#include "memddg/remesh.hpp"
#include "memddg/taylor.hpp"
#include "memddg/mesh_io.hpp"
#include "memddg/presets.hpp"
#include "memddg/io.hpp"
#include "memddg/validation.hpp"
