#pragma once

#include "rflr/basis.hpp"
#include "rflr/design.hpp"
#include "rflr/diagnostics.hpp"
#include "rflr/divergence.hpp"
#include "rflr/errors.hpp"
#include "rflr/grid.hpp"
#include "rflr/link.hpp"
#include "rflr/model.hpp"
#include "rflr/selection.hpp"
#include "rflr/simulation.hpp"
