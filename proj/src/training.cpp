#include "energon/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "energon/errors.hpp"
#include "energon/rng.hpp"

namespace energon {

namespace {

void shuffle_indices(std::vector<int>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(idx[i - 1], idx[j]);
  }
}

// Gradient tensors in the same order as CnnModel::trainable_views().
std::vector<Eigen::Map<Eigen::VectorXd>> gradient_views(Gradients& g) {
  std::vector<Eigen::Map<Eigen::VectorXd>> views;
  for (std::size_t i = 0; i < g.conv_w.size(); ++i) {
    views.emplace_back(g.conv_w[i].data(), g.conv_w[i].size());
    views.emplace_back(g.conv_b[i].data(), g.conv_b[i].size());
    views.emplace_back(g.bn_scale[i].data(), g.bn_scale[i].size());
    views.emplace_back(g.bn_shift[i].data(), g.bn_shift[i].size());
  }
  views.emplace_back(g.fc1_w.data(), g.fc1_w.size());
  views.emplace_back(g.fc1_b.data(), g.fc1_b.size());
  views.emplace_back(g.fc2_w.data(), g.fc2_w.size());
  views.emplace_back(g.fc2_b.data(), g.fc2_b.size());
  return views;
}

}  // namespace

std::vector<std::vector<int>> stratified_kfold(const std::vector<int>& labels,
                                               int k, std::uint64_t seed) {
  if (k < 2) throw DataError("stratified_kfold: k must be >= 2");
  if (labels.empty()) throw DataError("stratified_kfold: no labels");

  const int n_classes = *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<std::vector<int>> by_class(static_cast<std::size_t>(n_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) throw DataError("stratified_kfold: negative label");
    by_class[static_cast<std::size_t>(labels[i])].push_back(static_cast<int>(i));
  }

  Rng rng(seed);
  std::vector<std::vector<int>> folds(static_cast<std::size_t>(k));
  for (int c = 0; c < n_classes; ++c) {
    auto& members = by_class[static_cast<std::size_t>(c)];
    if (static_cast<int>(members.size()) < k)
      throw DataError("stratified_kfold: class " + std::to_string(c) + " has " +
                      std::to_string(members.size()) + " members, need >= " +
                      std::to_string(k));
    shuffle_indices(members, rng);
    for (std::size_t i = 0; i < members.size(); ++i)
      folds[i % static_cast<std::size_t>(k)].push_back(members[i]);
  }
  for (auto& fold : folds) std::sort(fold.begin(), fold.end());
  return folds;
}

TrainResult train(const CnnSpec& spec, const Batch& inputs,
                  const std::vector<int>& labels, const TrainConfig& cfg) {
  spec.validate();
  if (inputs.empty()) throw DataError("train: empty input set");
  if (inputs.size() != labels.size())
    throw DataError("train: input/label count mismatch");
  for (int y : labels)
    if (y < 0 || y >= spec.n_classes)
      throw DataError("train: label out of range for n_classes");
  if (cfg.epochs < 0) throw DataError("train: negative epoch count");
  if (cfg.batch_size < 1) throw DataError("train: batch_size must be >= 1");

  TrainResult result;
  result.model = init_model(spec, cfg.seed);
  auto params = result.model.trainable_views();
  std::vector<AdamState> states;
  states.reserve(params.size());
  for (const auto& p : params) states.emplace_back(p.size());

  Rng order_rng(splitmix64(cfg.seed));
  const int n = static_cast<int>(inputs.size());
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_indices(order, order_rng);
    double loss_sum = 0.0;
    for (int start = 0; start < n; start += cfg.batch_size) {
      const int stop = std::min(n, start + cfg.batch_size);
      Batch batch;
      std::vector<int> batch_labels;
      batch.reserve(static_cast<std::size_t>(stop - start));
      for (int i = start; i < stop; ++i) {
        batch.push_back(inputs[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
        batch_labels.push_back(labels[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
      }
      Gradients grads;
      const double loss = loss_and_gradients(result.model, batch, batch_labels, grads);
      if (!std::isfinite(loss))
        throw DataError("train: loss diverged at epoch " + std::to_string(epoch));
      loss_sum += loss * static_cast<double>(stop - start);
      auto gviews = gradient_views(grads);
      for (std::size_t p = 0; p < params.size(); ++p)
        adam_step(params[p], gviews[p], states[p], cfg.adam);
    }
    const double mean_loss = loss_sum / static_cast<double>(n);
    result.epoch_mean_loss.push_back(mean_loss);
    if (cfg.early_stop_loss > 0.0 && mean_loss < cfg.early_stop_loss) break;
  }
  return result;
}

std::vector<int> predict_classes(CnnModel& model, const Batch& inputs) {
  std::vector<int> out;
  out.reserve(inputs.size());
  constexpr std::size_t kChunk = 64;
  for (std::size_t start = 0; start < inputs.size(); start += kChunk) {
    const std::size_t stop = std::min(inputs.size(), start + kChunk);
    Batch chunk(inputs.begin() + static_cast<std::ptrdiff_t>(start),
                inputs.begin() + static_cast<std::ptrdiff_t>(stop));
    const Eigen::MatrixXd probs = forward(model, chunk, false);
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
      int best = 0;
      for (Eigen::Index c = 1; c < probs.cols(); ++c)
        if (probs(r, c) > probs(r, best)) best = static_cast<int>(c);
      out.push_back(best);
    }
  }
  return out;
}

void EvalReport::finalize() {
  max_accuracy = 0.0;
  mean_accuracy = 0.0;
  for (double a : fold_accuracy) {
    max_accuracy = std::max(max_accuracy, a);
    mean_accuracy += a;
  }
  if (!fold_accuracy.empty())
    mean_accuracy /= static_cast<double>(fold_accuracy.size());

  const Eigen::Index c = confusion.rows();
  precision.assign(static_cast<std::size_t>(c), 0.0);
  recall.assign(static_cast<std::size_t>(c), 0.0);
  for (Eigen::Index i = 0; i < c; ++i) {
    const double col = confusion.col(i).sum();
    const double row = confusion.row(i).sum();
    if (col > 0) precision[static_cast<std::size_t>(i)] = confusion(i, i) / col;
    if (row > 0) recall[static_cast<std::size_t>(i)] = confusion(i, i) / row;
  }
}

CvDetail cross_validate_detail(const CnnSpec& spec, const Batch& inputs,
                               const std::vector<int>& labels,
                               const std::vector<std::string>& class_names,
                               const TrainConfig& cfg,
                               const std::string& stage_name) {
  spec.validate();
  if (static_cast<int>(class_names.size()) != spec.n_classes)
    throw DataError("cross_validate: class name count does not match n_classes");
  if (cfg.k_folds < 2) throw DataError("cross_validate: k_folds must be >= 2");

  CvDetail detail;
  detail.folds = stratified_kfold(labels, cfg.k_folds, cfg.seed);
  detail.report.stage = stage_name;
  detail.report.classes = class_names;
  detail.report.confusion = Eigen::MatrixXi::Zero(spec.n_classes, spec.n_classes);

  for (std::size_t f = 0; f < detail.folds.size(); ++f) {
    const auto& holdout = detail.folds[f];
    std::vector<char> held(inputs.size(), 0);
    for (int i : holdout) held[static_cast<std::size_t>(i)] = 1;

    Batch train_x;
    std::vector<int> train_y;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (!held[i]) {
        train_x.push_back(inputs[i]);
        train_y.push_back(labels[i]);
      }
    }
    TrainConfig fold_cfg = cfg;
    fold_cfg.seed = cfg.seed + f;
    TrainResult trained = train(spec, train_x, train_y, fold_cfg);

    Batch test_x;
    for (int i : holdout) test_x.push_back(inputs[static_cast<std::size_t>(i)]);
    const std::vector<int> pred = predict_classes(trained.model, test_x);

    int hits = 0;
    for (std::size_t i = 0; i < holdout.size(); ++i) {
      const int truth = labels[static_cast<std::size_t>(holdout[i])];
      detail.report.confusion(truth, pred[i]) += 1;
      if (pred[i] == truth) ++hits;
    }
    detail.report.fold_accuracy.push_back(
        holdout.empty() ? 0.0
                        : static_cast<double>(hits) / static_cast<double>(holdout.size()));
    detail.fold_models.push_back(std::move(trained.model));
  }
  detail.report.finalize();
  return detail;
}

EvalReport cross_validate(const CnnSpec& spec, const Batch& inputs,
                          const std::vector<int>& labels,
                          const std::vector<std::string>& class_names,
                          const TrainConfig& cfg, const std::string& stage_name) {
  return cross_validate_detail(spec, inputs, labels, class_names, cfg, stage_name)
      .report;
}

}  // namespace energon
