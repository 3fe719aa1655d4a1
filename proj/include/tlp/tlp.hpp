#pragma once

#include "tlp/core.hpp"
#include "tlp/executor.hpp"
#include "tlp/harness.hpp"
#include "tlp/instr.hpp"
#include "tlp/monitor.hpp"
#include "tlp/perturb.hpp"
#include "tlp/planner.hpp"
#include "tlp/promptkit.hpp"
#include "tlp/tasks.hpp"
#include "tlp/world.hpp"
