#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "prokd/diffcore/graph.hpp"

namespace prokd::diff {

struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  // Moments, one per parameter in the order passed to adam_step.
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
};

// One bias-corrected Adam update over `params` using their gradient slots.
// Frozen parameters (and their moments) are left untouched. The parameter
// list must be passed in the same order on every call.
void adam_step(std::span<Parameter* const> params, AdamState& state);

}  // namespace prokd::diff
