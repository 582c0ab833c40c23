#pragma once

#include <functional>
#include <span>
#include <string>

#include "prokd/diffcore/graph.hpp"

namespace prokd::diff {

struct GradCheckResult {
  double max_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  std::size_t entries_checked = 0;
};

// Builds the scalar expression with `build`, backpropagates, and compares every
// parameter entry against a central difference with the given step:
//   max |analytic - numeric| / max(1, |numeric|).
// `build` must be a pure function of the parameter values.
GradCheckResult check_gradient(const std::function<Var(Graph&)>& build,
                               std::span<Parameter* const> params, double step = 1e-5);

}  // namespace prokd::diff
