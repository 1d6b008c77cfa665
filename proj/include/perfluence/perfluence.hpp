#pragma once

// Method-level performance-influence modeling: configuration spaces,
// sampling designs, trace ingestion, tree/forest learners, the two-step
// coarse-to-fine pipeline, and a synthetic ground-truth system for
// verification.

#include "perfluence/analysis.hpp"
#include "perfluence/cart.hpp"
#include "perfluence/configspace.hpp"
#include "perfluence/constraint.hpp"
#include "perfluence/csvio.hpp"
#include "perfluence/errors.hpp"
#include "perfluence/forest.hpp"
#include "perfluence/hash.hpp"
#include "perfluence/json.hpp"
#include "perfluence/manifest.hpp"
#include "perfluence/parallel.hpp"
#include "perfluence/perfmodel.hpp"
#include "perfluence/pipeline.hpp"
#include "perfluence/rng.hpp"
#include "perfluence/sampling.hpp"
#include "perfluence/stats.hpp"
#include "perfluence/synthsys.hpp"
#include "perfluence/traces.hpp"
#include "perfluence/version.hpp"
