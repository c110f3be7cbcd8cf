#pragma once

// Umbrella header for the consistent cross-view matching library.

#include "ccm/consistency.hpp"
#include "ccm/core.hpp"
#include "ccm/crossview_match.hpp"
#include "ccm/dataset.hpp"
#include "ccm/eval.hpp"
#include "ccm/intra_cluster.hpp"
#include "ccm/io.hpp"
#include "ccm/metric_learn.hpp"
#include "ccm/pipeline.hpp"
