// Umbrella header.

#pragma once

#include "umac/bounds.hpp"
#include "umac/channel.hpp"
#include "umac/codec.hpp"
#include "umac/config.hpp"
#include "umac/core.hpp"
#include "umac/detection.hpp"
#include "umac/montecarlo.hpp"
#include "umac/protocols.hpp"
#include "umac/runner.hpp"
#include "umac/scenario.hpp"
#include "umac/sequences.hpp"
