#pragma once

#include "ifs/errors.hpp"
#include "ifs/experiment.hpp"
#include "ifs/orbit.hpp"
#include "ifs/rng.hpp"
#include "ifs/serialization.hpp"
#include "ifs/shadowing.hpp"
#include "ifs/space.hpp"
#include "ifs/system.hpp"
#include "ifs/version.hpp"
