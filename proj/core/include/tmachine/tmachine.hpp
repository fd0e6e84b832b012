#pragma once

#include "tmachine/engine.hpp"
#include "tmachine/errors.hpp"
#include "tmachine/estimator.hpp"
#include "tmachine/exact.hpp"
#include "tmachine/io.hpp"
#include "tmachine/model.hpp"
#include "tmachine/optimize.hpp"
#include "tmachine/rng.hpp"

namespace tmachine {
inline constexpr const char* kVersion = "0.1.0";
}
