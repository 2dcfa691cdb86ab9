#pragma once

#include "ptsync/config.hpp"
#include "ptsync/csv.hpp"
#include "ptsync/dynamics.hpp"
#include "ptsync/errors.hpp"
#include "ptsync/integrator.hpp"
#include "ptsync/linalg.hpp"
#include "ptsync/network.hpp"
#include "ptsync/regulator.hpp"
#include "ptsync/scalar_lab.hpp"
#include "ptsync/simulator.hpp"
