// SPDX-License-Identifier: Apache-2.0
#include "learners/init.hpp"

#include <cmath>

namespace gremetl::learners {

num::Tensor scaled_uniform(std::size_t rows, std::size_t cols,
                           std::size_t fan_in, std::size_t fan_out,
                           num::Rng &rng) {
  const double limit =
    std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  num::Tensor t({rows, cols});
  for (double &v : t.values())
    v = rng.uniform(-limit, limit);
  return t;
}

} // namespace gremetl::learners
