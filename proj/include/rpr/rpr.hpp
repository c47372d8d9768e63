#pragma once

// Umbrella header: singularity surfaces and singularity-free joint-space
// boxes for planar 3-RPR parallel manipulators.

#include "rpr/boxsearch.hpp"
#include "rpr/errors.hpp"
#include "rpr/kinematics.hpp"
#include "rpr/model.hpp"
#include "rpr/parallel.hpp"
#include "rpr/singularity.hpp"
#include "rpr/version.hpp"
#include "rpr/workspace.hpp"
