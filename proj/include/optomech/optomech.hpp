#pragma once

#include "optomech/budget.hpp"
#include "optomech/cavity.hpp"
#include "optomech/cold_damping.hpp"
#include "optomech/constants.hpp"
#include "optomech/csv.hpp"
#include "optomech/errors.hpp"
#include "optomech/fitting.hpp"
#include "optomech/mechanics.hpp"
#include "optomech/mode_shape.hpp"
#include "optomech/runner.hpp"
#include "optomech/scenario.hpp"
#include "optomech/signal.hpp"
#include "optomech/spectrum.hpp"
#include "optomech/welch.hpp"
