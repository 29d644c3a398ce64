#pragma once

#include "isoflow/adjacency.hpp"
#include "isoflow/chart2.hpp"
#include "isoflow/critical.hpp"
#include "isoflow/empath.hpp"
#include "isoflow/flow.hpp"
#include "isoflow/io.hpp"
#include "isoflow/linalg.hpp"
#include "isoflow/parallel.hpp"
#include "isoflow/partition.hpp"
#include "isoflow/rng.hpp"
#include "isoflow/spectrum.hpp"
#include "isoflow/state.hpp"
#include "isoflow/stats.hpp"
#include "isoflow/stochastic.hpp"
