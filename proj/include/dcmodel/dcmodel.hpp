#pragma once

#include "dcmodel/charfn.hpp"
#include "dcmodel/contraction.hpp"
#include "dcmodel/dilation.hpp"
#include "dcmodel/error.hpp"
#include "dcmodel/hardy.hpp"
#include "dcmodel/json_io.hpp"
#include "dcmodel/linops.hpp"
#include "dcmodel/modules.hpp"
#include "dcmodel/rng.hpp"
#include "dcmodel/scenario.hpp"
