#pragma once

#include "caqubit/angular.hpp"
#include "caqubit/atomic.hpp"
#include "caqubit/detection.hpp"
#include "caqubit/dynamics.hpp"
#include "caqubit/errors.hpp"
#include "caqubit/fit.hpp"
#include "caqubit/ini.hpp"
#include "caqubit/motion.hpp"
#include "caqubit/noise.hpp"
#include "caqubit/physics.hpp"
#include "caqubit/prep.hpp"
#include "caqubit/random.hpp"
#include "caqubit/harness/config.hpp"
#include "caqubit/harness/experiments.hpp"
#include "caqubit/harness/report.hpp"
