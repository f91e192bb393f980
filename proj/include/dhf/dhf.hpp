#pragma once

#include "dhf/error.hpp"
#include "dhf/core.hpp"
#include "dhf/regress.hpp"
#include "dhf/ingest.hpp"
#include "dhf/model_io.hpp"
#include "dhf/models.hpp"
#include "dhf/neural.hpp"
#include "dhf/algorithms.hpp"
#include "dhf/bench.hpp"
