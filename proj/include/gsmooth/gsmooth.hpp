#pragma once

#include "core.hpp"
#include "objectives.hpp"
#include "oracle.hpp"
#include "optimizers.hpp"
#include "theory.hpp"
#include "monitor.hpp"
#include "harness.hpp"
#include "verifiers.hpp"
