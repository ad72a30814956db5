#pragma once

#include <Eigen/Core>
#include <vector>

namespace energon {

// Bias-corrected Adam over a flat parameter vector.
struct AdamConfig {
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  Eigen::VectorXd m, v;
  long t = 0;  // completed steps; first update sees t == 1

  explicit AdamState(Eigen::Index n = 0)
      : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}
};

// In-place update: theta -= lr * m_hat / (sqrt(v_hat) + eps).
void adam_step(Eigen::Ref<Eigen::VectorXd> theta, const Eigen::VectorXd& grad,
               AdamState& state, const AdamConfig& cfg);

}  // namespace energon
