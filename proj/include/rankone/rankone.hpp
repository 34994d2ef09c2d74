#pragma once

#include "rankone/adtheory.hpp"
#include "rankone/bounds.hpp"
#include "rankone/cascade.hpp"
#include "rankone/error.hpp"
#include "rankone/io.hpp"
#include "rankone/measures.hpp"
#include "rankone/orthobuilder.hpp"
#include "rankone/quadrature.hpp"
#include "rankone/transforms.hpp"
