#pragma once

#include "sarma/basis.hpp"
#include "sarma/error.hpp"
#include "sarma/features.hpp"
#include "sarma/fit.hpp"
#include "sarma/forecast.hpp"
#include "sarma/initial.hpp"
#include "sarma/model.hpp"
#include "sarma/omega_search.hpp"
#include "sarma/parallel.hpp"
#include "sarma/prox.hpp"
#include "sarma/random.hpp"
#include "sarma/selection.hpp"
#include "sarma/simulate.hpp"
#include "sarma/tensor.hpp"
#include "sarma/varma.hpp"
