#pragma once

#include "opsub/error.hpp"
#include "opsub/factored_operator.hpp"
#include "opsub/subspace.hpp"
#include "opsub/simplex.hpp"
#include "opsub/hull.hpp"
#include "opsub/simgen.hpp"
#include "opsub/io.hpp"
#include "opsub/experiments.hpp"
