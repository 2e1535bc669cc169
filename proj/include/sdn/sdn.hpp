// Umbrella header.

#pragma once

#include "sdn/checkpoint.hpp"
#include "sdn/denoise.hpp"
#include "sdn/errors.hpp"
#include "sdn/geometry.hpp"
#include "sdn/kdtree.hpp"
#include "sdn/mesh.hpp"
#include "sdn/metrics.hpp"
#include "sdn/network.hpp"
#include "sdn/noise.hpp"
#include "sdn/oracle.hpp"
#include "sdn/patches.hpp"
#include "sdn/rng.hpp"
#include "sdn/training.hpp"
#include "sdn/xyz_io.hpp"
