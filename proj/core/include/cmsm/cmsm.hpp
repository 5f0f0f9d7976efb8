#pragma once

#include "cmsm/baselines.hpp"
#include "cmsm/checkpoint.hpp"
#include "cmsm/dataset_io.hpp"
#include "cmsm/metrics.hpp"
#include "cmsm/models.hpp"
#include "cmsm/operators.hpp"
#include "cmsm/phantom.hpp"
#include "cmsm/sampling.hpp"
#include "cmsm/training.hpp"
