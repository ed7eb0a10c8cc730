#pragma once

#include "wcsph/bench.hpp"
#include "wcsph/config_io.hpp"
#include "wcsph/core.hpp"
#include "wcsph/dam_break.hpp"
#include "wcsph/dynamics.hpp"
#include "wcsph/error.hpp"
#include "wcsph/integrator.hpp"
#include "wcsph/kernels.hpp"
#include "wcsph/neighbors.hpp"
#include "wcsph/output.hpp"
#include "wcsph/parallel.hpp"
#include "wcsph/validation.hpp"
#include "wcsph/vec3.hpp"
