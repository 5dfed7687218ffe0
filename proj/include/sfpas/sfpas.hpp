#pragma once

#include "sfpas/exact_scalar.hpp"
#include "sfpas/family.hpp"
#include "sfpas/invariants.hpp"
#include "sfpas/json_io.hpp"
#include "sfpas/lp.hpp"
#include "sfpas/matrix.hpp"
#include "sfpas/polynomial.hpp"
#include "sfpas/quiver.hpp"
#include "sfpas/rational.hpp"
#include "sfpas/toric.hpp"
#include "sfpas/vortex.hpp"
