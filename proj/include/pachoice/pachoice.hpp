#pragma once

#include "pachoice/config_file.hpp"
#include "pachoice/degree_class_index.hpp"
#include "pachoice/fenwick_tree.hpp"
#include "pachoice/growth_engine.hpp"
#include "pachoice/harness.hpp"
#include "pachoice/model_config.hpp"
#include "pachoice/rng.hpp"
#include "pachoice/stats.hpp"
#include "pachoice/theory.hpp"
#include "pachoice/trace_io.hpp"
#include "pachoice/version.hpp"
