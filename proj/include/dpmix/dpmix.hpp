#pragma once

#include "dpmix/csv.hpp"
#include "dpmix/data.hpp"
#include "dpmix/empirical_bayes.hpp"
#include "dpmix/engine.hpp"
#include "dpmix/error.hpp"
#include "dpmix/gammafn.hpp"
#include "dpmix/linalg.hpp"
#include "dpmix/metrics.hpp"
#include "dpmix/model.hpp"
#include "dpmix/moments.hpp"
#include "dpmix/params.hpp"
#include "dpmix/rng.hpp"
#include "dpmix/simulate.hpp"
