#pragma once

#include "rmood/benchmark.hpp"
#include "rmood/core.hpp"
#include "rmood/cusum.hpp"
#include "rmood/detector.hpp"
#include "rmood/envgen.hpp"
#include "rmood/episode_io.hpp"
#include "rmood/error.hpp"
#include "rmood/eval.hpp"
#include "rmood/features.hpp"
#include "rmood/iforest.hpp"
#include "rmood/model_io.hpp"
#include "rmood/rng.hpp"
