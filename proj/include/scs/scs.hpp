#pragma once

#include "scs/analysis.hpp"
#include "scs/decoder.hpp"
#include "scs/errors.hpp"
#include "scs/gaussian_model.hpp"
#include "scs/gmm.hpp"
#include "scs/imaging.hpp"
#include "scs/numeric.hpp"
#include "scs/parallel.hpp"
#include "scs/rng.hpp"
#include "scs/sensing.hpp"
#include "scs/serialization.hpp"
