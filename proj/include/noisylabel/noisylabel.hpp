#pragma once

#include "noisylabel/errors.hpp"
#include "noisylabel/numerics.hpp"
#include "noisylabel/losses.hpp"
#include "noisylabel/smoothing.hpp"
#include "noisylabel/dataset.hpp"
#include "noisylabel/mixup.hpp"
#include "noisylabel/selection.hpp"
#include "noisylabel/model.hpp"
#include "noisylabel/trainer.hpp"
#include "noisylabel/harness.hpp"
