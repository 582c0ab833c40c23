#include "prokd/diffcore/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "prokd/error.hpp"

namespace prokd::diff {

namespace {
double evaluate(const std::function<Var(Graph&)>& build) {
  Graph g;
  return build(g).value().item();
}
}  // namespace

GradCheckResult check_gradient(const std::function<Var(Graph&)>& build,
                               std::span<Parameter* const> params, double step) {
  if (!(step > 0.0 && step <= 1e-2)) throw Error("diffcore", "check_gradient: step must lie in (0, 1e-2]");
  std::vector<Tensor> analytic;
  {
    Graph g;
    Var root = build(g);
    g.backward(root, params);
    for (const Parameter* p : params) analytic.push_back(p->grad);
  }
  GradCheckResult result;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double saved = p.value[i];
      p.value[i] = saved + step;
      const double plus = evaluate(build);
      p.value[i] = saved - step;
      const double minus = evaluate(build);
      p.value[i] = saved;
      const double numeric = (plus - minus) / (2.0 * step);
      const double err = std::abs(analytic[k][i] - numeric) / std::max(1.0, std::abs(numeric));
      ++result.entries_checked;
      if (err > result.max_error || result.worst_parameter.empty()) {
        if (err >= result.max_error) {
          result.max_error = err;
          result.worst_parameter = p.name;
          result.worst_index = i;
        }
      }
    }
  }
  return result;
}

}  // namespace prokd::diff
