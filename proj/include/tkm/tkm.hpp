#ifndef TKM_TKM_HPP
#define TKM_TKM_HPP

#include "assignment.hpp"
#include "core.hpp"
#include "data.hpp"
#include "engine.hpp"
#include "metrics.hpp"
#include "rng.hpp"
#include "seeding.hpp"

#endif  // TKM_TKM_HPP
