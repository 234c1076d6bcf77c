#ifndef GSMDG_GSMDG_HPP
#define GSMDG_GSMDG_HPP

#include "analysis.hpp"
#include "config.hpp"
#include "csv.hpp"
#include "dynamics.hpp"
#include "fitting.hpp"
#include "graph.hpp"
#include "ingest.hpp"
#include "parallel.hpp"
#include "rng.hpp"

#endif  // GSMDG_GSMDG_HPP
