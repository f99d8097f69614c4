#pragma once

#include "lsd/error.hpp"
#include "lsd/fmaps.hpp"
#include "lsd/latent.hpp"
#include "lsd/linalg.hpp"
#include "lsd/mesh.hpp"
#include "lsd/network.hpp"
#include "lsd/operator_algebra.hpp"
#include "lsd/partition.hpp"
#include "lsd/spectral.hpp"
#include "lsd/synthetic.hpp"
#include "lsd/variability.hpp"
