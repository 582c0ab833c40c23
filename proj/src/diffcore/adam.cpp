#include "prokd/diffcore/adam.hpp"

#include <cmath>

#include "prokd/error.hpp"

namespace prokd::diff {

void adam_step(std::span<Parameter* const> params, AdamState& state) {
  if (!(state.learning_rate > 0.0)) throw Error("diffcore", "adam: learning rate must be positive");
  if (state.first_moment.empty()) {
    for (const Parameter* p : params) {
      state.first_moment.emplace_back(p->value.shape());
      state.second_moment.emplace_back(p->value.shape());
    }
  }
  if (state.first_moment.size() != params.size())
    throw Error("diffcore", "adam: parameter list changed between steps");

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    if (p.frozen) continue;
    Tensor& m = state.first_moment[k];
    Tensor& v = state.second_moment[k];
    if (!m.same_shape(p.value) || !p.grad.same_shape(p.value))
      throw Error("diffcore", "adam: shape mismatch for parameter " + p.name);
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p.value[i] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  }
}

}  // namespace prokd::diff
