#pragma once

#include "rcotto/types.hpp"
#include "rcotto/qops.hpp"
#include "rcotto/model.hpp"
#include "rcotto/config.hpp"
#include "rcotto/generators.hpp"
#include "rcotto/superop.hpp"
#include "rcotto/propagate.hpp"
#include "rcotto/segment.hpp"
#include "rcotto/krylov.hpp"
#include "rcotto/engine.hpp"
#include "rcotto/sweep.hpp"
#include "rcotto/verify.hpp"
