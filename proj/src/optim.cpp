#include "editfx/optim.hpp"

#include <cmath>

namespace editfx::nn {

double gradient_norm(const ParamRefs& params) {
  double s = 0.0;
  for (const auto* p : params) {
    for (double g : p->grad.data()) s += g * g;
  }
  return std::sqrt(s);
}

double adam_step(AdamState& state, const ParamRefs& params) {
  const auto& cfg = state.config;
  if (!(cfg.clip_norm > 0.0)) throw InvalidArgument("adam: clip_norm must be positive");
  for (const auto* p : params) {
    if (!p->grad.all_finite()) throw InvalidArgument("adam: non-finite gradient in " + p->name);
  }
  if (state.first_moment.empty()) {
    for (const auto* p : params) {
      state.first_moment.emplace_back(p->value.shape());
      state.second_moment.emplace_back(p->value.shape());
    }
  }
  if (state.first_moment.size() != params.size()) throw InvalidArgument("adam: parameter list changed between steps");

  const double norm = gradient_norm(params);
  const double scale = norm > cfg.clip_norm ? cfg.clip_norm / norm : 1.0;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto* p = params[k];
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    if (m.size() != p->value.size()) throw InvalidArgument("adam: shape mismatch for " + p->name);
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double g = p->grad[i] * scale;
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p->value[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
  return norm;
}

}  // namespace editfx::nn
