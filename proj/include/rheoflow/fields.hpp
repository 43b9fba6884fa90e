#pragma once

#include "rheoflow/checkpoint.hpp"
#include "rheoflow/grid.hpp"
#include "rheoflow/interpolate.hpp"
#include "rheoflow/operators.hpp"
#include "rheoflow/random.hpp"
#include "rheoflow/spectral.hpp"
