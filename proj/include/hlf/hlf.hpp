#pragma once

// Decomposition-based forecasting with a dual min-max hybrid loss.

#include "hlf/error.hpp"
#include "hlf/tensor.hpp"
#include "hlf/series.hpp"
#include "hlf/dataset.hpp"
#include "hlf/model.hpp"
#include "hlf/hybrid_loss.hpp"
#include "hlf/metrics.hpp"
#include "hlf/trainer.hpp"
#include "hlf/synthgen.hpp"
#include "hlf/checkpoint.hpp"
#include "hlf/config.hpp"
#include "hlf/experiment.hpp"
