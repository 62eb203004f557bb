/*
 * Umbrella header for the blemesh simulator library.
 */
#pragma once

#include "blemesh/engine.hpp"
#include "blemesh/interference.hpp"
#include "blemesh/metrics.hpp"
#include "blemesh/node.hpp"
#include "blemesh/radio.hpp"
#include "blemesh/rng.hpp"
#include "blemesh/scenario.hpp"
#include "blemesh/time.hpp"
