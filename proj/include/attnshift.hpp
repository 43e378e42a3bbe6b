#pragma once

#include "attnshift/common.hpp"
#include "attnshift/montage.hpp"
#include "attnshift/spectral.hpp"
#include "attnshift/synthgen.hpp"
#include "attnshift/stats.hpp"
#include "attnshift/features.hpp"
#include "attnshift/selection.hpp"
#include "attnshift/forest.hpp"
#include "attnshift/shap.hpp"
#include "attnshift/eval.hpp"
#include "attnshift/report.hpp"
#include "attnshift/config.hpp"
#include "attnshift/experiment.hpp"
