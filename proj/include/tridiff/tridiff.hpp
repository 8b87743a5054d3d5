#pragma once

#include "error.hpp"
#include "rng.hpp"
#include "parallel.hpp"
#include "csv.hpp"
#include "paneldata.hpp"
#include "regress.hpp"
#include "tdiff.hpp"
#include "drdtd.hpp"
#include "dgp.hpp"
#include "mcharness.hpp"
#include "pretrend.hpp"
#include "io_json.hpp"
