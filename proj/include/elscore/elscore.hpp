#pragma once

#include "elscore/analysis.hpp"
#include "elscore/asymptotic.hpp"
#include "elscore/binomial.hpp"
#include "elscore/exact.hpp"
#include "elscore/mle.hpp"
#include "elscore/normal.hpp"
#include "elscore/operating.hpp"
#include "elscore/parallel.hpp"
#include "elscore/types.hpp"
