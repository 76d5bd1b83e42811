#pragma once

#include "choquard/constructions.hpp"
#include "choquard/fft.hpp"
#include "choquard/field.hpp"
#include "choquard/field_io.hpp"
#include "choquard/functional.hpp"
#include "choquard/grid.hpp"
#include "choquard/grid_ops.hpp"
#include "choquard/manifold.hpp"
#include "choquard/params.hpp"
#include "choquard/report_io.hpp"
#include "choquard/riesz.hpp"
#include "choquard/solve.hpp"
