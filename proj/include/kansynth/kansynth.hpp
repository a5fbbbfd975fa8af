#pragma once

#include "kansynth/approximation.hpp"
#include "kansynth/compose.hpp"
#include "kansynth/dyadic.hpp"
#include "kansynth/edge_function.hpp"
#include "kansynth/errors.hpp"
#include "kansynth/mlp.hpp"
#include "kansynth/network.hpp"
#include "kansynth/rng.hpp"
#include "kansynth/serialization.hpp"
#include "kansynth/spline.hpp"
#include "kansynth/synthesis.hpp"
