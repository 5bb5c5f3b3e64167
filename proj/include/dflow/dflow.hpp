// dflow.hpp - convenience umbrella for the whole library.

#pragma once

#include "dflow/common.hpp"
#include "dflow/config.hpp"
#include "dflow/drag.hpp"
#include "dflow/fem.hpp"
#include "dflow/formulations.hpp"
#include "dflow/mesh.hpp"
#include "dflow/postproc.hpp"
#include "dflow/problems.hpp"
#include "dflow/runner.hpp"
#include "dflow/solver.hpp"
#include "dflow/verify.hpp"
#include "dflow/vtk.hpp"
