#ifndef ONEBIT_ONEBIT_HPP
#define ONEBIT_ONEBIT_HPP

#include "onebit/bounds.hpp"
#include "onebit/fusion.hpp"
#include "onebit/harness.hpp"
#include "onebit/model.hpp"
#include "onebit/rng.hpp"
#include "onebit/sensing.hpp"
#include "onebit/spectral.hpp"
#include "onebit/spectrum.hpp"
#include "onebit/tracker.hpp"

#endif  // ONEBIT_ONEBIT_HPP
