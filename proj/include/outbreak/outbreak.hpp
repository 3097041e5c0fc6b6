#pragma once

#include "outbreak/bayes_scan.hpp"
#include "outbreak/common.hpp"
#include "outbreak/data_model.hpp"
#include "outbreak/distributions.hpp"
#include "outbreak/eval.hpp"
#include "outbreak/glm.hpp"
#include "outbreak/multivariate.hpp"
#include "outbreak/pointproc.hpp"
#include "outbreak/prospective.hpp"
#include "outbreak/random.hpp"
#include "outbreak/report.hpp"
#include "outbreak/scan.hpp"
#include "outbreak/snapshot.hpp"
#include "outbreak/univariate.hpp"
#include "outbreak/zones.hpp"
