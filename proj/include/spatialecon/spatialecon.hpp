#pragma once

#include "error.hpp"
#include "rng.hpp"
#include "stats.hpp"
#include "geometry.hpp"
#include "weights.hpp"
#include "autocorr.hpp"
#include "logdet.hpp"
#include "models.hpp"
#include "simulate.hpp"
#include "io.hpp"
#include "report.hpp"
