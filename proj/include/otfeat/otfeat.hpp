#pragma once

// Umbrella header: pixel-level OT distances between feature maps,
// cross-domain nearest-neighbor retrieval with safe pruning, and convex
// feature merging with dataset tooling.

#include "otfeat/assignment.hpp"
#include "otfeat/error.hpp"
#include "otfeat/feature_map.hpp"
#include "otfeat/index.hpp"
#include "otfeat/io.hpp"
#include "otfeat/merge.hpp"
#include "otfeat/ot.hpp"
#include "otfeat/ot_types.hpp"
#include "otfeat/report.hpp"
#include "otfeat/retrieval.hpp"
#include "otfeat/sinkhorn.hpp"
