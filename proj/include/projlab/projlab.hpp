#pragma once

#include "projlab/delta_core.hpp"
#include "projlab/incidence.hpp"
#include "projlab/additive.hpp"
#include "projlab/product_construction.hpp"
#include "projlab/scale_blowup.hpp"
#include "projlab/generators.hpp"
#include "projlab/csv.hpp"
