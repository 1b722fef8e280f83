#pragma once

#include "sefusion/autodiff.hpp"
#include "sefusion/checkpoint.hpp"
#include "sefusion/data.hpp"
#include "sefusion/dataset_io.hpp"
#include "sefusion/errors.hpp"
#include "sefusion/fusion.hpp"
#include "sefusion/gradcheck.hpp"
#include "sefusion/matrix.hpp"
#include "sefusion/metrics.hpp"
#include "sefusion/model.hpp"
#include "sefusion/optim.hpp"
#include "sefusion/prior.hpp"
#include "sefusion/report.hpp"
#include "sefusion/synth.hpp"
#include "sefusion/tasks.hpp"
#include "sefusion/train.hpp"
