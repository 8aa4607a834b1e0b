#pragma once

#include "soficlab/cayley.hpp"
#include "soficlab/derived.hpp"
#include "soficlab/error.hpp"
#include "soficlab/gibbs.hpp"
#include "soficlab/kieffer.hpp"
#include "soficlab/model.hpp"
#include "soficlab/model_io.hpp"
#include "soficlab/pairwise.hpp"
#include "soficlab/randompast.hpp"
#include "soficlab/shift.hpp"
#include "soficlab/sofic.hpp"
#include "soficlab/stats.hpp"
#include "soficlab/transfer.hpp"
