#include "energon/optimizer.hpp"

#include <cmath>

#include "energon/errors.hpp"

namespace energon {

void adam_step(Eigen::Ref<Eigen::VectorXd> theta, const Eigen::VectorXd& grad,
               AdamState& state, const AdamConfig& cfg) {
  if (theta.size() != grad.size())
    throw DataError("adam_step: parameter/gradient size mismatch");
  if (state.m.size() != theta.size()) {
    state.m = Eigen::VectorXd::Zero(theta.size());
    state.v = Eigen::VectorXd::Zero(theta.size());
    state.t = 0;
  }
  ++state.t;
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
  state.v = cfg.beta2 * state.v.array().matrix() +
            (1.0 - cfg.beta2) * grad.array().square().matrix();
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  theta.array() -= cfg.lr * (state.m.array() / bc1) /
                   ((state.v.array() / bc2).sqrt() + cfg.epsilon);
}

}  // namespace energon
