#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "energon/features.hpp"

namespace energon {

// ---- architecture ----------------------------------------------------------
//
// conv(valid, stride 1) -> batch-norm -> ReLU [-> max-pool 2/2] per block,
// then flatten -> FC -> ReLU -> FC -> softmax.
struct CnnSpec {
  std::vector<int> conv_filters = {32, 16, 8};
  int kernel_size = 9;
  std::vector<bool> pool_after = {true, true, false};  // pool follows block i
  int fc_hidden = 64;
  int n_classes = 0;
  int in_channels = kFeatureChannels;
  int input_length = kDefaultFeatureLength;
  double bn_momentum = 0.1;
  double bn_epsilon = 1e-5;

  void validate() const;  // layer-chain consistency; lengths stay positive
  std::vector<int> layer_lengths() const;  // signal length after each block
  int flatten_dim() const;
};

// ---- layers (free functions; x is channels x length) -----------------------

// Valid 1-D cross-correlation, stride 1. w is (filters) x (in_ch*k) with
// column index c*k + j. Accumulation order is filter -> channel -> tap,
// matching the reference loop nest bit for bit.
Eigen::MatrixXd conv1d_forward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w,
                               const Eigen::VectorXd& b);
void conv1d_backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w,
                     const Eigen::MatrixXd& dy, Eigen::MatrixXd& dx,
                     Eigen::MatrixXd& dw, Eigen::VectorXd& db);

// Pooling runs over the sample axis with x oriented length x channels:
// window 2, stride 2, odd tail dropped, ties keep the earlier sample.
// argmax records the winning row per output element for the backward pass.
Eigen::MatrixXd maxpool2_forward(const Eigen::MatrixXd& x,
                                 Eigen::MatrixXi& argmax);
Eigen::MatrixXd maxpool2_backward(const Eigen::MatrixXd& dy,
                                  const Eigen::MatrixXi& argmax,
                                  Eigen::Index input_len);

Eigen::MatrixXd relu(const Eigen::MatrixXd& x);

// Row-wise softmax; every row sums to 1 within 1e-9.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits);

// Mean cross-entropy over the batch, probabilities clamped at 1e-12.
double cross_entropy(const Eigen::MatrixXd& probs, const std::vector<int>& labels);

// ---- model -----------------------------------------------------------------

struct ConvBlock {
  Eigen::MatrixXd w;  // filters x (in_ch * k)
  Eigen::VectorXd b;
  Eigen::VectorXd bn_scale, bn_shift;
  Eigen::VectorXd bn_run_mean, bn_run_var;
};

struct FcLayer {
  Eigen::MatrixXd w;  // out x in
  Eigen::VectorXd b;
};

struct CnnModel {
  CnnSpec spec;
  std::vector<ConvBlock> blocks;
  FcLayer fc1, fc2;

  std::size_t parameter_count() const;
  // Flat parameter visit in declaration order (checkpoint / optimizer order):
  // per block w,b,bn_scale,bn_shift, then fc1.w,fc1.b, fc2.w,fc2.b.
  // Running stats are serialized but not trained.
  std::vector<Eigen::Map<Eigen::VectorXd>> trainable_views();
};

// He-uniform weights, zero biases, BN scale 1 / shift 0 / run_var 1.
CnnModel init_model(const CnnSpec& spec, std::uint64_t seed);

using Batch = std::vector<Eigen::MatrixXd>;  // each: channels x length

// probs: batch x n_classes. `training` selects batch statistics (and updates
// running stats) vs stored running statistics.
Eigen::MatrixXd forward(CnnModel& model, const Batch& batch, bool training);

struct Gradients {
  std::vector<Eigen::MatrixXd> conv_w;
  std::vector<Eigen::VectorXd> conv_b;
  std::vector<Eigen::VectorXd> bn_scale, bn_shift;
  Eigen::MatrixXd fc1_w, fc2_w;
  Eigen::VectorXd fc1_b, fc2_b;
};

// Training-mode forward + full backward pass. Returns the batch loss and
// fills analytic gradients for every trainable parameter.
double loss_and_gradients(CnnModel& model, const Batch& batch,
                          const std::vector<int>& labels, Gradients& grads);

}  // namespace energon
