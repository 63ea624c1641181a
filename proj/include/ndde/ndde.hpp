#pragma once

#include "ndde/funcmodel.hpp"
#include "ndde/equation.hpp"
#include "ndde/sigma.hpp"
#include "ndde/criteria.hpp"
#include "ndde/simulator.hpp"
#include "ndde/io.hpp"
#include "ndde/harness.hpp"
