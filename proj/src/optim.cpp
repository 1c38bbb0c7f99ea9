#include "reidlab/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace reidlab {

TensorState& OptimizerState::slot(std::size_t index, std::size_t size) {
  if (slots.size() <= index) slots.resize(index + 1);
  TensorState& s = slots[index];
  if (s.m.empty()) {
    s.m.assign(size, 0.0);
    s.v.assign(size, 0.0);
    s.vhat.assign(size, 0.0);
  } else if (s.m.size() != size) {
    throw std::invalid_argument("OptimizerState: slot size changed");
  }
  return s;
}

void amsgrad_update(std::span<double> param, std::span<const double> grad,
                    TensorState& state, std::int64_t step, double lr,
                    const AmsGradConfig& cfg) {
  if (param.size() != grad.size() || param.size() != state.m.size())
    throw std::invalid_argument("amsgrad_update: shape mismatch");
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    if (state.v[i] > state.vhat[i]) state.vhat[i] = state.v[i];
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.vhat[i] / bc2;
    param[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
  }
}

double lr_schedule(int epoch, double base_lr) {
  if (epoch < 1) throw std::invalid_argument("lr_schedule: epoch must be >= 1");
  if (epoch < 20) return base_lr;
  if (epoch < 40) return base_lr / 10.0;
  return base_lr / 100.0;
}

}  // namespace reidlab
