#ifndef FACEPIPE_FACEPIPE_HPP
#define FACEPIPE_FACEPIPE_HPP

// Umbrella header: the whole library in dependency order.

#include "facepipe/errors.hpp"
#include "facepipe/rng.hpp"
#include "facepipe/image.hpp"
#include "facepipe/skin.hpp"
#include "facepipe/edges.hpp"
#include "facepipe/regions.hpp"
#include "facepipe/clustering.hpp"
#include "facepipe/dct.hpp"
#include "facepipe/features.hpp"
#include "facepipe/rbf.hpp"
#include "facepipe/fmaca.hpp"
#include "facepipe/fixtures.hpp"
#include "facepipe/pipeline.hpp"
#include "facepipe/serialize.hpp"

#endif  // FACEPIPE_FACEPIPE_HPP
