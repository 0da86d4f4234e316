#pragma once

#include "rcfd/codec.hpp"
#include "rcfd/error.hpp"
#include "rcfd/features.hpp"
#include "rcfd/grid.hpp"
#include "rcfd/image.hpp"
#include "rcfd/localize.hpp"
#include "rcfd/metrics.hpp"
#include "rcfd/net.hpp"
#include "rcfd/pipeline.hpp"
#include "rcfd/random.hpp"
#include "rcfd/tamper.hpp"
#include "rcfd/version.hpp"
