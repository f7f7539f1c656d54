#pragma once

// Umbrella header: the whole FOF search library.

#include "fofscope/config.hpp"
#include "fofscope/dispersion.hpp"
#include "fofscope/errors.hpp"
#include "fofscope/fof.hpp"
#include "fofscope/noise.hpp"
#include "fofscope/odr.hpp"
#include "fofscope/pipeline.hpp"
#include "fofscope/preprocess.hpp"
#include "fofscope/render.hpp"
#include "fofscope/spectrum.hpp"
#include "fofscope/spectrum_io.hpp"
#include "fofscope/version.hpp"
