#pragma once

#include "randset/catalog.hpp"
#include "randset/error.hpp"
#include "randset/io.hpp"
#include "randset/multicat.hpp"
#include "randset/numerics.hpp"
#include "randset/pipeline.hpp"
#include "randset/power.hpp"
#include "randset/scoring.hpp"
