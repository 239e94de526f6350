#pragma once

#include "lsmix/distances.hpp"
#include "lsmix/em.hpp"
#include "lsmix/errors.hpp"
#include "lsmix/loss.hpp"
#include "lsmix/model.hpp"
#include "lsmix/nelder_mead.hpp"
#include "lsmix/parallel.hpp"
#include "lsmix/polysys.hpp"
#include "lsmix/quadrature.hpp"
#include "lsmix/rng.hpp"
#include "lsmix/sim.hpp"
