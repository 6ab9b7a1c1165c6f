#pragma once

#include "cdrflow/config.hpp"
#include "cdrflow/dataset.hpp"
#include "cdrflow/errors.hpp"
#include "cdrflow/evaluation.hpp"
#include "cdrflow/graph_ops.hpp"
#include "cdrflow/io.hpp"
#include "cdrflow/ode.hpp"
#include "cdrflow/parallel.hpp"
#include "cdrflow/pipeline.hpp"
#include "cdrflow/random.hpp"
#include "cdrflow/synthgen.hpp"
