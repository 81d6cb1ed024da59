#pragma once

#include "logpot/entropy.hpp"
#include "logpot/equilibrium.hpp"
#include "logpot/error.hpp"
#include "logpot/format.hpp"
#include "logpot/logkernel.hpp"
#include "logpot/measure.hpp"
#include "logpot/potential.hpp"
#include "logpot/regularize.hpp"
#include "logpot/sampler.hpp"
#include "logpot/serialize.hpp"
#include "logpot/verify.hpp"
