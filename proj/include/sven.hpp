#pragma once

#include "sven/dataset.hpp"
#include "sven/error.hpp"
#include "sven/neighborhood.hpp"
#include "sven/posterior.hpp"
#include "sven/predict.hpp"
#include "sven/random.hpp"
#include "sven/search.hpp"
#include "sven/simbench.hpp"
