#pragma once
// Umbrella header for the BiLAF sample-selection library.

#include "bilaf/activeft.hpp"
#include "bilaf/baselines.hpp"
#include "bilaf/boundary_select.hpp"
#include "bilaf/cluster_geometry.hpp"
#include "bilaf/common.hpp"
#include "bilaf/denoise.hpp"
#include "bilaf/evaluator.hpp"
#include "bilaf/feature_store.hpp"
#include "bilaf/pca.hpp"
