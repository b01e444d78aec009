// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dmdc/error.hpp"
#include "dmdc/linalg.hpp"
#include "dmdc/dmd.hpp"
#include "dmdc/controlled.hpp"
#include "dmdc/rom.hpp"
#include "dmdc/synth.hpp"
#include "dmdc/io.hpp"
