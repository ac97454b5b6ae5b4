#pragma once

// Umbrella header for the temporal sound localisation toolkit.

#include "tsl/core.hpp"
#include "tsl/errors.hpp"
#include "tsl/features.hpp"
#include "tsl/fusion.hpp"
#include "tsl/io.hpp"
#include "tsl/metrics.hpp"
#include "tsl/synthetic.hpp"
