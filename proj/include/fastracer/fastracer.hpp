#pragma once

// Umbrella header.

#include "fastracer/clocks.hpp"
#include "fastracer/detector.hpp"
#include "fastracer/fasttrack.hpp"
#include "fastracer/ivc.hpp"
#include "fastracer/lockset.hpp"
#include "fastracer/oracle.hpp"
#include "fastracer/report.hpp"
#include "fastracer/trace.hpp"
#include "fastracer/types.hpp"
#include "fastracer/workload.hpp"
