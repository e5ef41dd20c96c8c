#include <cmath>

#include "gml/segmodel.hpp"

namespace gml {

OptState make_opt_state(const OptimizerConfig& config, std::size_t param_count) {
  OptState st;
  st.config = config;
  st.first.assign(param_count, 0.0);
  if (config.kind == OptimizerKind::Adam) st.second.assign(param_count, 0.0);
  return st;
}

void opt_step_inplace(ModelWeights& w, std::span<const double> grad, OptState& st) {
  const std::size_t n = w.params.size();
  const bool adam = st.config.kind == OptimizerKind::Adam;
  if (grad.size() != n || st.first.size() != n || (adam && st.second.size() != n)) {
    throw Error(ErrorCode::ShapeMismatch, "optimizer step: gradient/buffer length does not match params");
  }
  for (double v : grad)
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteGradient, "gradient contains non-finite values");

  const auto& c = st.config;
  ++st.step_count;
  if (!adam) {
    for (std::size_t i = 0; i < n; ++i) {
      st.first[i] = c.momentum * st.first[i] + grad[i];
      w.params[i] -= c.learning_rate * st.first[i];
    }
    return;
  }
  const double t = static_cast<double>(st.step_count);
  const double bias1 = 1.0 - std::pow(c.beta1, t);
  const double bias2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < n; ++i) {
    st.first[i] = c.beta1 * st.first[i] + (1.0 - c.beta1) * grad[i];
    st.second[i] = c.beta2 * st.second[i] + (1.0 - c.beta2) * grad[i] * grad[i];
    const double m_hat = st.first[i] / bias1;
    const double v_hat = st.second[i] / bias2;
    w.params[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
}

std::pair<ModelWeights, OptState> opt_step(ModelWeights w, std::span<const double> grad, OptState st) {
  opt_step_inplace(w, grad, st);
  return {std::move(w), std::move(st)};
}

}  // namespace gml
