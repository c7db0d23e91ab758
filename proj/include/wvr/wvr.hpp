#pragma once

#include "wvr/drift_opt.hpp"
#include "wvr/errors.hpp"
#include "wvr/follmer.hpp"
#include "wvr/functionals.hpp"
#include "wvr/gaussian_law.hpp"
#include "wvr/ou_gaussian.hpp"
#include "wvr/parallel.hpp"
#include "wvr/paths.hpp"
#include "wvr/quadrature.hpp"
#include "wvr/report.hpp"
#include "wvr/rng.hpp"
#include "wvr/stats.hpp"
#include "wvr/variational.hpp"
