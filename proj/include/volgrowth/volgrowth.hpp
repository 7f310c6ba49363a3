#pragma once

#include "volgrowth/assembly.hpp"
#include "volgrowth/errors.hpp"
#include "volgrowth/exact.hpp"
#include "volgrowth/geometry_checks.hpp"
#include "volgrowth/growth.hpp"
#include "volgrowth/io.hpp"
#include "volgrowth/metric_graph.hpp"
#include "volgrowth/pieces.hpp"
#include "volgrowth/pipeline.hpp"
#include "volgrowth/tree.hpp"
