#pragma once

#include "kkge/adam.hpp"
#include "kkge/alloc.hpp"
#include "kkge/batchnorm.hpp"
#include "kkge/checkpoint.hpp"
#include "kkge/dataset.hpp"
#include "kkge/errors.hpp"
#include "kkge/evaluator.hpp"
#include "kkge/experiment.hpp"
#include "kkge/gradcheck.hpp"
#include "kkge/linalg.hpp"
#include "kkge/losses.hpp"
#include "kkge/model.hpp"
#include "kkge/rng.hpp"
#include "kkge/trainer.hpp"
#include "kkge/version.hpp"
