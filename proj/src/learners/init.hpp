// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>

#include "numcore/rng.hpp"
#include "numcore/tensor.hpp"

namespace gremetl::learners {

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
num::Tensor scaled_uniform(std::size_t rows, std::size_t cols,
                           std::size_t fan_in, std::size_t fan_out,
                           num::Rng &rng);

} // namespace gremetl::learners
