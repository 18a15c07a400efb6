#pragma once

// Convenience umbrella for the whole library.

#include "zar/cli.hpp"
#include "zar/csv.hpp"
#include "zar/distributions.hpp"
#include "zar/envelope.hpp"
#include "zar/links.hpp"
#include "zar/model.hpp"
#include "zar/normal.hpp"
#include "zar/optim.hpp"
#include "zar/residuals.hpp"
#include "zar/rng.hpp"
#include "zar/simulation.hpp"
#include "zar/special_functions.hpp"
#include "zar/stats.hpp"
