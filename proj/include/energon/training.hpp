#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "energon/cnn.hpp"
#include "energon/optimizer.hpp"

namespace energon {

struct TrainConfig {
  AdamConfig adam;        // lr default 1e-5
  int epochs = 50;
  int batch_size = 16;
  std::uint64_t seed = 0;
  int k_folds = 5;        // >= 2
  // Optional deterministic early stop: end training after the first epoch
  // whose mean loss falls below this value (0 disables).
  double early_stop_loss = 0.0;
};

// Per-class round-robin deal after a seeded shuffle: per-class fold counts
// differ by at most one. DataError when any class has fewer than k members.
std::vector<std::vector<int>> stratified_kfold(const std::vector<int>& labels,
                                               int k, std::uint64_t seed);

struct TrainResult {
  CnnModel model;
  std::vector<double> epoch_mean_loss;
};

// Seeded init + shuffled mini-batches + Adam. Aborts with DataError if the
// loss turns non-finite (divergence guard). Bit-deterministic per seed.
TrainResult train(const CnnSpec& spec, const Batch& inputs,
                  const std::vector<int>& labels, const TrainConfig& cfg);

struct EvalReport {
  std::string stage;
  std::vector<std::string> classes;
  std::vector<double> fold_accuracy;
  double max_accuracy = 0.0;
  double mean_accuracy = 0.0;
  Eigen::MatrixXi confusion;  // rows: truth, cols: prediction; pooled
  std::vector<double> precision, recall;

  void finalize();  // derives max/mean/precision/recall from folds+confusion
};

// Eval-mode predictions for a trained model.
std::vector<int> predict_classes(CnnModel& model, const Batch& inputs);

// K-fold cross-validation: trains k models (fold f uses seed cfg.seed + f),
// evaluates each on its held-out fold in eval mode, pools the confusion
// matrix. Row sums of the pooled confusion equal per-class totals.
EvalReport cross_validate(const CnnSpec& spec, const Batch& inputs,
                          const std::vector<int>& labels,
                          const std::vector<std::string>& class_names,
                          const TrainConfig& cfg, const std::string& stage_name);

// As above, but also hands back the k fold models and fold assignments so
// callers can re-evaluate the same models on perturbed inputs.
struct CvDetail {
  EvalReport report;
  std::vector<CnnModel> fold_models;
  std::vector<std::vector<int>> folds;
};
CvDetail cross_validate_detail(const CnnSpec& spec, const Batch& inputs,
                               const std::vector<int>& labels,
                               const std::vector<std::string>& class_names,
                               const TrainConfig& cfg,
                               const std::string& stage_name);

}  // namespace energon
