#pragma once

#include "curveflow/analysis.hpp"
#include "curveflow/commands.hpp"
#include "curveflow/curve_geometry.hpp"
#include "curveflow/errors.hpp"
#include "curveflow/flow_solver.hpp"
#include "curveflow/io.hpp"
#include "curveflow/spectral.hpp"
