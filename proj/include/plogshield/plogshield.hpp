#pragma once

// Umbrella header for the plogshield library.

#include "plogshield/bench.hpp"
#include "plogshield/core.hpp"
#include "plogshield/corpus.hpp"
#include "plogshield/extract.hpp"
#include "plogshield/map_store.hpp"
#include "plogshield/pipeline.hpp"
#include "plogshield/pseudonym.hpp"
#include "plogshield/substitute.hpp"
#include "plogshield/synth.hpp"
