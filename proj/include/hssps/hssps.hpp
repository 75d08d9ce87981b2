#pragma once

#include "hssps/types.hpp"
#include "hssps/config.hpp"
#include "hssps/corpus.hpp"
#include "hssps/storage.hpp"
#include "hssps/metadata.hpp"
#include "hssps/query.hpp"
#include "hssps/heuristics.hpp"
#include "hssps/pagination.hpp"
#include "hssps/engine.hpp"
#include "hssps/bench.hpp"
