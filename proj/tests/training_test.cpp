#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "energon/checkpoint.hpp"
#include "energon/errors.hpp"
#include "energon/rng.hpp"
#include "energon/training.hpp"

using namespace energon;
namespace fs = std::filesystem;

namespace {

// Two classes separable by dominant frequency; mild per-sample noise.
void separable_data(int per_class, int length, Batch& x, std::vector<int>& y) {
  Rng rng(99);
  for (int c = 0; c < 2; ++c) {
    const double freq = c == 0 ? 0.3 : 1.1;
    for (int i = 0; i < per_class; ++i) {
      Eigen::MatrixXd m(2, length);
      const double phase = rng.uniform(0.0, 6.28);
      for (int t = 0; t < length; ++t) {
        m(0, t) = std::sin(freq * t + phase) + 0.05 * rng.normal();
        m(1, t) = std::cos(freq * t + phase) + 0.05 * rng.normal();
      }
      x.push_back(std::move(m));
      y.push_back(c);
    }
  }
}

CnnSpec tiny_spec(int length, int classes) {
  CnnSpec spec;
  spec.conv_filters = {6};
  spec.pool_after = {true};
  spec.kernel_size = 5;
  spec.fc_hidden = 8;
  spec.n_classes = classes;
  spec.input_length = length;
  return spec;
}

}  // namespace

TEST_CASE("stratified k-fold balances every class across folds") {
  // One class of seven, k = 5: fold sizes come out 2,2,1,1,1.
  std::vector<int> lone(7, 0);
  auto folds = stratified_kfold(lone, 5, 1);
  REQUIRE(folds.size() == 5u);
  std::vector<std::size_t> sizes;
  for (const auto& f : folds) sizes.push_back(f.size());
  std::sort(sizes.begin(), sizes.end(), std::greater<>());
  CHECK(sizes == std::vector<std::size_t>{2, 2, 1, 1, 1});

  // Two classes, 10 + 5, k = 5: every fold holds 2 + 1.
  std::vector<int> labels;
  for (int i = 0; i < 10; ++i) labels.push_back(0);
  for (int i = 0; i < 5; ++i) labels.push_back(1);
  folds = stratified_kfold(labels, 5, 7);
  std::set<int> seen;
  for (const auto& f : folds) {
    int zeros = 0, ones = 0;
    for (int idx : f) {
      CHECK(seen.insert(idx).second);  // disjoint
      (labels[idx] == 0 ? zeros : ones)++;
    }
    CHECK(zeros == 2);
    CHECK(ones == 1);
  }
  CHECK(seen.size() == labels.size());  // covering

  // Deterministic per seed, different across seeds.
  CHECK(stratified_kfold(labels, 5, 7) == folds);
  CHECK(stratified_kfold(labels, 5, 8) != folds);

  CHECK_THROWS_AS((void)stratified_kfold(labels, 6, 1), DataError);  // class 1 has 5
  CHECK_THROWS_AS((void)stratified_kfold(labels, 1, 1), DataError);
}

TEST_CASE("adam first step moves by about lr in the gradient direction") {
  AdamConfig cfg;
  cfg.lr = 0.05;
  AdamState state(2);
  Eigen::VectorXd theta(2);
  theta << 1.0, -2.0;
  Eigen::VectorXd grad(2);
  grad << 3.0, -0.7;

  Eigen::VectorXd before = theta;
  adam_step(theta, grad, state, cfg);
  // m_hat/(sqrt(v_hat)+eps) == g/|g| on the first step, up to epsilon.
  CHECK(std::abs(theta[0] - (before[0] - cfg.lr)) < 1e-6);
  CHECK(std::abs(theta[1] - (before[1] + cfg.lr)) < 1e-6);
  CHECK(state.t == 1);

  // lr 0 leaves parameters alone but still advances the state.
  AdamConfig frozen = cfg;
  frozen.lr = 0.0;
  Eigen::VectorXd untouched = theta;
  adam_step(theta, grad, state, frozen);
  CHECK((theta.array() == untouched.array()).all());
  CHECK(state.t == 2);

  Eigen::VectorXd wrong(3);
  wrong.setZero();
  CHECK_THROWS_AS(adam_step(theta, wrong, state, cfg), DataError);
}

TEST_CASE("adam converges on a quadratic bowl") {
  AdamConfig cfg;
  cfg.lr = 0.1;
  AdamState state(1);
  Eigen::VectorXd theta(1);
  theta << 5.0;
  for (int i = 0; i < 500; ++i) {
    Eigen::VectorXd grad(1);
    grad << 2.0 * theta[0];  // d/dx of x^2
    adam_step(theta, grad, state, cfg);
  }
  CHECK(std::abs(theta[0]) < 1e-2);
}

TEST_CASE("training separates a two-class toy problem deterministically") {
  Batch x;
  std::vector<int> y;
  separable_data(10, 32, x, y);

  TrainConfig cfg;
  cfg.adam.lr = 5e-3;
  cfg.epochs = 30;
  cfg.batch_size = 8;
  cfg.seed = 11;
  CnnSpec spec = tiny_spec(32, 2);

  TrainResult a = train(spec, x, y, cfg);
  REQUIRE(a.epoch_mean_loss.size() == 30u);
  CHECK(a.epoch_mean_loss.back() < a.epoch_mean_loss.front());

  std::vector<int> pred = predict_classes(a.model, x);
  int correct = 0;
  for (std::size_t i = 0; i < y.size(); ++i) correct += pred[i] == y[i];
  CHECK(correct == static_cast<int>(y.size()));

  // Bit-for-bit reproducible.
  TrainResult b = train(spec, x, y, cfg);
  CHECK(a.epoch_mean_loss == b.epoch_mean_loss);
  CHECK(predict_classes(b.model, x) == pred);

  // A different seed trains a different model.
  TrainConfig other = cfg;
  other.seed = 12;
  TrainResult c = train(spec, x, y, other);
  CHECK(a.epoch_mean_loss != c.epoch_mean_loss);
}

TEST_CASE("early stop ends training after the threshold epoch") {
  Batch x;
  std::vector<int> y;
  separable_data(8, 32, x, y);
  TrainConfig cfg;
  cfg.adam.lr = 5e-3;
  cfg.epochs = 50;
  cfg.seed = 2;
  cfg.early_stop_loss = 0.2;
  TrainResult r = train(tiny_spec(32, 2), x, y, cfg);
  REQUIRE(!r.epoch_mean_loss.empty());
  CHECK(r.epoch_mean_loss.size() < 50u);
  CHECK(r.epoch_mean_loss.back() < 0.2);
  // Every earlier epoch stayed at or above the threshold.
  for (std::size_t i = 0; i + 1 < r.epoch_mean_loss.size(); ++i)
    CHECK(r.epoch_mean_loss[i] >= 0.2);
}

TEST_CASE("non-finite loss aborts training") {
  Batch x;
  std::vector<int> y;
  separable_data(4, 32, x, y);
  x[0](0, 3) = std::nan("");

  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 1;
  try {
    (void)train(tiny_spec(32, 2), x, y, cfg);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("diverged") != std::string::npos);
  }
}

TEST_CASE("train validates labels and shapes") {
  Batch x;
  std::vector<int> y;
  separable_data(3, 32, x, y);
  y[0] = 2;  // outside n_classes == 2
  CHECK_THROWS_AS((void)train(tiny_spec(32, 2), x, y, TrainConfig{}), DataError);

  y[0] = 0;
  y.pop_back();
  CHECK_THROWS_AS((void)train(tiny_spec(32, 2), x, y, TrainConfig{}), DataError);
}

TEST_CASE("cross validation pools a confusion matrix over folds") {
  Batch x;
  std::vector<int> y;
  separable_data(16, 32, x, y);
  TrainConfig cfg;
  cfg.adam.lr = 8e-3;
  cfg.epochs = 40;
  cfg.batch_size = 8;
  cfg.seed = 5;
  cfg.k_folds = 2;

  EvalReport rep = cross_validate(tiny_spec(32, 2), x, y, {"low", "high"}, cfg, "toy");
  CHECK(rep.stage == "toy");
  REQUIRE(rep.fold_accuracy.size() == 2u);
  CHECK(rep.max_accuracy == *std::max_element(rep.fold_accuracy.begin(),
                                              rep.fold_accuracy.end()));
  CHECK(rep.max_accuracy >= rep.mean_accuracy);

  // Pooled confusion covers every trace exactly once.
  REQUIRE(rep.confusion.rows() == 2);
  CHECK(rep.confusion.row(0).sum() == 16);
  CHECK(rep.confusion.row(1).sum() == 16);
  CHECK(rep.mean_accuracy > 0.9);  // separable by construction

  // Same seed reproduces every accuracy and confusion cell.
  EvalReport again = cross_validate(tiny_spec(32, 2), x, y, {"low", "high"}, cfg, "toy");
  CHECK(again.fold_accuracy == rep.fold_accuracy);
  CHECK((again.confusion.array() == rep.confusion.array()).all());

  CHECK_THROWS_AS((void)cross_validate(tiny_spec(32, 2), x, y, {"only"}, cfg, "toy"),
                  DataError);
}

TEST_CASE("finalize derives precision and recall from the confusion matrix") {
  EvalReport rep;
  rep.classes = {"a", "b"};
  rep.fold_accuracy = {0.5, 1.0};
  rep.confusion.resize(2, 2);
  rep.confusion << 2, 1, 0, 3;
  rep.finalize();

  CHECK(rep.max_accuracy == 1.0);
  CHECK(rep.mean_accuracy == doctest::Approx(0.75));
  REQUIRE(rep.precision.size() == 2u);
  CHECK(rep.precision[0] == doctest::Approx(1.0));        // 2 / (2+0)
  CHECK(rep.precision[1] == doctest::Approx(3.0 / 4.0));  // 3 / (1+3)
  CHECK(rep.recall[0] == doctest::Approx(2.0 / 3.0));
  CHECK(rep.recall[1] == doctest::Approx(1.0));

  // Empty column: precision defined as zero.
  rep.confusion << 2, 0, 3, 0;
  rep.finalize();
  CHECK(rep.precision[1] == 0.0);
}

TEST_CASE("checkpoints restore the model bit for bit") {
  Batch x;
  std::vector<int> y;
  separable_data(6, 32, x, y);
  TrainConfig cfg;
  cfg.adam.lr = 5e-3;
  cfg.epochs = 10;
  cfg.seed = 3;
  TrainResult r = train(tiny_spec(32, 2), x, y, cfg);

  fs::path dir = fs::temp_directory_path() / "energon_ckpt_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string path = (dir / "toy.ckpt").string();
  save_checkpoint(path, r.model, {"toy-stage", "toy-tax", {"low", "high"}});

  LoadedCheckpoint back = load_checkpoint(path);
  CHECK(back.info.stage == "toy-stage");
  CHECK(back.info.taxonomy == "toy-tax");
  CHECK(back.info.classes == std::vector<std::string>{"low", "high"});
  CHECK(back.model.spec.input_length == 32);

  // Every tensor identical, including batch-norm running stats.
  for (std::size_t i = 0; i < r.model.blocks.size(); ++i) {
    CHECK((back.model.blocks[i].w.array() == r.model.blocks[i].w.array()).all());
    CHECK((back.model.blocks[i].bn_run_mean.array() ==
           r.model.blocks[i].bn_run_mean.array()).all());
    CHECK((back.model.blocks[i].bn_run_var.array() ==
           r.model.blocks[i].bn_run_var.array()).all());
  }
  CHECK((back.model.fc2.w.array() == r.model.fc2.w.array()).all());
  CHECK(predict_classes(back.model, x) == predict_classes(r.model, x));
}

TEST_CASE("checkpoint loader rejects corruption") {
  Batch x;
  std::vector<int> y;
  separable_data(3, 32, x, y);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.seed = 4;
  TrainResult r = train(tiny_spec(32, 2), x, y, cfg);

  fs::path dir = fs::temp_directory_path() / "energon_ckpt_corrupt";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string path = (dir / "m.ckpt").string();
  save_checkpoint(path, r.model, {"s", "t", {"a", "b"}});

  // Flip one payload byte.
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekg(0, std::ios::end);
    const auto size = static_cast<long>(f.tellg());
    f.seekp(size - 100);
    char byte;
    f.seekg(size - 100);
    f.read(&byte, 1);
    byte = static_cast<char>(byte ^ 0x40);
    f.seekp(size - 100);
    f.write(&byte, 1);
  }
  try {
    (void)load_checkpoint(path);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("checksum") != std::string::npos);
  }

  // Truncated payload.
  save_checkpoint(path, r.model, {"s", "t", {"a", "b"}});
  {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<long>(bytes.size()) - 16);
  }
  try {
    (void)load_checkpoint(path);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("truncat") != std::string::npos);
  }

  // Wrong magic line.
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << "not a model\n";
  }
  CHECK_THROWS_AS((void)load_checkpoint(path), DataError);
  CHECK_THROWS_AS((void)load_checkpoint((dir / "missing.ckpt").string()), DataError);

  // Class names with commas cannot round-trip the CSV header.
  CHECK_THROWS_AS(
      save_checkpoint(path, r.model, {"s", "t", {"a,b", "c"}}), DataError);
}
