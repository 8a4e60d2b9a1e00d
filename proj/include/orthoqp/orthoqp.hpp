#pragma once

#include "orthoqp/stiefel.hpp"
#include "orthoqp/objective.hpp"
#include "orthoqp/linesearch.hpp"
#include "orthoqp/critical.hpp"
#include "orthoqp/diagnostics.hpp"
#include "orthoqp/bench.hpp"
