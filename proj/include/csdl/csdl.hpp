#pragma once

#include "csdl/bounds.hpp"
#include "csdl/errors.hpp"
#include "csdl/projections.hpp"
#include "csdl/random.hpp"
#include "csdl/solver.hpp"
#include "csdl/synthesis.hpp"
#include "csdl/tensor_ops.hpp"

#include "csdl/harness/csv.hpp"
#include "csdl/harness/experiment.hpp"
#include "csdl/harness/fit.hpp"
#include "csdl/harness/summarize.hpp"
