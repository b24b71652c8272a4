#pragma once

// Umbrella header for the whole pipeline: causal window sampling, the
// feature/causality extractor models, CCC training and evaluation, and the
// streaming inference engine.

#include "capnet/adam.hpp"
#include "capnet/ccc.hpp"
#include "capnet/checkpoint.hpp"
#include "capnet/dataset.hpp"
#include "capnet/errors.hpp"
#include "capnet/evaluate.hpp"
#include "capnet/feature_cache.hpp"
#include "capnet/grad_check.hpp"
#include "capnet/models.hpp"
#include "capnet/nn.hpp"
#include "capnet/ppm.hpp"
#include "capnet/rational.hpp"
#include "capnet/rng.hpp"
#include "capnet/run_config.hpp"
#include "capnet/sampler.hpp"
#include "capnet/streaming.hpp"
#include "capnet/synthetic.hpp"
#include "capnet/tensor.hpp"
#include "capnet/training.hpp"
