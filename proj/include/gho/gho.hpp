#pragma once

#include "gho/almost_convex.hpp"
#include "gho/bloch.hpp"
#include "gho/bounds.hpp"
#include "gho/continuity.hpp"
#include "gho/eigensolver.hpp"
#include "gho/io.hpp"
#include "gho/lattice.hpp"
#include "gho/model.hpp"
#include "gho/parallel.hpp"
#include "gho/partition.hpp"
#include "gho/quadrature.hpp"
#include "gho/rational.hpp"
#include "gho/resolvent.hpp"
#include "gho/spectrum.hpp"
#include "gho/truncated_operator.hpp"
