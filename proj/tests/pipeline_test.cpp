#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "energon/errors.hpp"
#include "energon/hierarchy.hpp"
#include "energon/registry.hpp"
#include "energon/report.hpp"
#include "energon/robustness.hpp"
#include "energon/simulate.hpp"
#include "energon/taxonomy.hpp"
#include "energon/trace_io.hpp"

using namespace energon;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* tag) {
  fs::path p = fs::temp_directory_path() / (std::string("energon_pipeline_") + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

CnnSpec small_spec() {
  CnnSpec spec;
  spec.conv_filters = {8};
  spec.pool_after = {true};
  spec.kernel_size = 9;
  spec.fc_hidden = 16;
  spec.input_length = 840;
  return spec;
}

TrainConfig quick_cfg() {
  TrainConfig cfg;
  cfg.adam.lr = 3e-3;
  cfg.epochs = 4;
  cfg.batch_size = 16;
  cfg.seed = 7;
  cfg.k_folds = 2;
  return cfg;
}

TraceDataset synth_dataset(const LabelTaxonomy& taxonomy, int per_class,
                           std::uint64_t base_seed) {
  return build_synthetic_dataset(taxonomy, per_class, NoiseScenario{},
                                 PowerModelParams::registry_scale(),
                                 ThermalModelParams::registry_scale(), 7.0, 120.0,
                                 base_seed);
}

// Two single-leaf root classes, no refinement stages.
LabelTaxonomy pair_taxonomy() {
  LabelTaxonomy t;
  t.name = "pair";
  t.leaves = {registry_lookup("t5-small").label(),
              registry_lookup("opus-mt-en-fr").label()};
  TaxonomyStage root;
  root.name = "family";
  root.criterion = StageCriterion::family;
  root.classes = {"T5", "MarianMT"};
  t.stages = {root};
  return t;
}

}  // namespace

TEST_CASE("hierarchical predictor routes every prediction consistently") {
  const LabelTaxonomy& taxonomy = builtin_taxonomy("custom");
  TraceDataset ds = synth_dataset(taxonomy, 4, 4000);

  HierarchicalPredictor predictor =
      train_hierarchical(taxonomy, ds, small_spec(), quick_cfg());

  // Multi-leaf head classes get a branch model; the single-leaf "12" class
  // routes directly.
  CHECK(predictor.branch_models.size() == 3u);
  CHECK(predictor.branch_models.count("8") == 1u);
  CHECK(predictor.branch_models.count("16") == 1u);
  CHECK(predictor.branch_models.count("32") == 1u);
  CHECK(predictor.branch_models.count("12") == 0u);

  const TaxonomyStage& root = taxonomy.root_stage();
  for (std::size_t i = 0; i < ds.traces.size(); i += 3) {
    HierarchicalPrediction pred = predict_hierarchical(predictor, ds.traces[i]);
    CHECK(taxonomy.contains(pred.leaf));
    // The leaf always lies inside the predicted root class.
    CHECK(taxonomy.class_of(root, pred.leaf) == pred.root_class);
    CHECK(pred.root_confidence > 0.0);
    CHECK(pred.root_confidence <= 1.0);
    CHECK(pred.branch_confidence > 0.0);
    CHECK(pred.branch_confidence <= 1.0);
    if (pred.root_class == "12") {
      CHECK(pred.leaf.model_name == "custom-12x12");
      CHECK(pred.branch_confidence == 1.0);
    }
  }
}

TEST_CASE("single-leaf root classes route directly with full confidence") {
  LabelTaxonomy taxonomy = pair_taxonomy();
  CHECK(taxonomy.validate().empty());

  TraceDataset ds = synth_dataset(taxonomy, 3, 900);
  HierarchicalPredictor predictor =
      train_hierarchical(taxonomy, ds, small_spec(), quick_cfg());
  CHECK(predictor.branch_models.empty());

  for (const Trace& t : ds.traces) {
    HierarchicalPrediction pred = predict_hierarchical(predictor, t);
    CHECK(pred.branch_confidence == 1.0);
    if (pred.root_class == "T5")
      CHECK(pred.leaf.model_name == "t5-small");
    else
      CHECK(pred.leaf.model_name == registry_lookup("opus-mt-en-fr").name);
  }
}

TEST_CASE("predictor directories reload into an identical predictor") {
  const LabelTaxonomy& taxonomy = builtin_taxonomy("custom");
  TraceDataset ds = synth_dataset(taxonomy, 2, 11000);
  TrainConfig cfg = quick_cfg();
  cfg.epochs = 2;
  HierarchicalPredictor predictor =
      train_hierarchical(taxonomy, ds, small_spec(), cfg);

  const fs::path dir = temp_dir("predictor");
  save_predictor(dir.string(), predictor);
  CHECK(fs::exists(dir / "predictor.meta"));
  CHECK(fs::exists(dir / "root.ckpt"));
  CHECK(fs::exists(dir / "branch_16.ckpt"));

  HierarchicalPredictor loaded = load_predictor(dir.string());
  CHECK(loaded.taxonomy.name == "custom");
  CHECK(loaded.branch_models.size() == predictor.branch_models.size());

  for (std::size_t i = 0; i < ds.traces.size(); i += 5) {
    HierarchicalPrediction a = predict_hierarchical(predictor, ds.traces[i]);
    HierarchicalPrediction b = predict_hierarchical(loaded, ds.traces[i]);
    CHECK(a.leaf == b.leaf);
    CHECK(a.root_class == b.root_class);
    CHECK(a.root_confidence == b.root_confidence);
    CHECK(a.branch_confidence == b.branch_confidence);
  }

  CHECK_THROWS_AS((void)load_predictor((dir / "missing").string()), DataError);

  std::ofstream bad(dir / "predictor.meta", std::ios::trunc);
  bad << "something else\n";
  bad.close();
  try {
    (void)load_predictor(dir.string());
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("not a predictor directory") !=
          std::string::npos);
  }

  fs::remove_all(dir);
}

TEST_CASE("hierarchy training rejects unusable datasets") {
  const LabelTaxonomy& taxonomy = builtin_taxonomy("custom");

  TraceDataset empty;
  CHECK_THROWS_AS(
      (void)train_hierarchical(taxonomy, empty, small_spec(), quick_cfg()),
      DataError);

  TraceDataset ds = synth_dataset(taxonomy, 2, 12000);
  ds.traces[3].meta.label.reset();
  try {
    (void)train_hierarchical(taxonomy, ds, small_spec(), quick_cfg());
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("no label") != std::string::npos);
  }
}

TEST_CASE("report bundles carry the summary, confusion matrix, and plots") {
  EvalReport report;
  report.stage = "demo-stage";
  report.classes = {"a", "b"};
  report.fold_accuracy = {0.5, 1.0};
  report.confusion = Eigen::MatrixXi::Zero(2, 2);
  report.confusion << 2, 1, 0, 3;
  report.finalize();

  Trace trace = synthesize_trace(registry_lookup("custom-6x8"), NoiseScenario{},
                                 PowerModelParams::registry_scale(),
                                 ThermalModelParams::registry_scale(), 7.0, 10.0, 5);

  const fs::path dir = temp_dir("report");
  make_report(dir.string(), {report}, {{"demo trace", trace}});

  std::ifstream summary_in(dir / "summary.txt");
  REQUIRE(summary_in.good());
  std::string summary((std::istreambuf_iterator<char>(summary_in)),
                      std::istreambuf_iterator<char>());
  CHECK(summary == render_summary({report}));
  CHECK(summary.find("demo-stage") != std::string::npos);
  CHECK(summary.find("1.0000") != std::string::npos);
  CHECK(summary.find("0.7500") != std::string::npos);
  CHECK(summary.find("# mean_accuracy averages the per-fold accuracies") !=
        std::string::npos);

  std::ifstream conf_in(dir / "demo-stage.confusion.tsv");
  REQUIRE(conf_in.good());
  std::string conf((std::istreambuf_iterator<char>(conf_in)),
                   std::istreambuf_iterator<char>());
  CHECK(conf == render_confusion_tsv(report));
  CHECK(conf.find("truth\\pred\ta\tb") == 0u);
  CHECK(conf.find("a\t2\t1") != std::string::npos);
  CHECK(conf.find("b\t0\t3") != std::string::npos);

  // Plot bundle: a replayable trace copy plus two-column plot data.
  Trace round = read_trace_file((dir / "plots" / "demo_trace.trace").string());
  CHECK(round.samples() == trace.samples());
  std::ifstream dat(dir / "plots" / "demo_trace.power.dat");
  REQUIRE(dat.good());
  std::string first_line;
  std::getline(dat, first_line);
  double t0 = -1, v0 = 0;
  REQUIRE(std::sscanf(first_line.c_str(), "%lf\t%lf", &t0, &v0) == 2);
  CHECK(t0 == 0.0);
  CHECK(v0 == doctest::Approx(trace.power_w[0]).epsilon(1e-6));
  CHECK(fs::exists(dir / "plots" / "demo_trace.temp.dat"));

  fs::remove_all(dir);
}

TEST_CASE("reporting nothing is an error") {
  const fs::path dir = temp_dir("report_empty");
  try {
    make_report(dir.string(), {}, {});
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("nothing to report") != std::string::npos);
  }

  // Plots alone are a valid bundle; no summary is written.
  Trace trace = synthesize_trace(registry_lookup("custom-6x8"), NoiseScenario{},
                                 PowerModelParams::registry_scale(),
                                 ThermalModelParams::registry_scale(), 7.0, 10.0, 6);
  make_report(dir.string(), {}, {{"only-plot", trace}});
  CHECK_FALSE(fs::exists(dir / "summary.txt"));
  CHECK(fs::exists(dir / "plots" / "only-plot.trace"));
  fs::remove_all(dir);
}

TEST_CASE("the default noise ladder escalates one process at a time") {
  std::vector<NoiseScenario> ladder = default_noise_ladder();
  REQUIRE(ladder.size() == 3u);
  CHECK(ladder[0].to_string() == "matmul");
  CHECK(ladder[1].to_string() == "matmul,cnn_classify");
  CHECK(ladder[2].to_string() == "matmul,cnn_classify,vit_inference");
}

TEST_CASE("robustness drops are measured against the clean baseline") {
  RobustnessConfig cfg;
  cfg.taxonomy = pair_taxonomy();
  cfg.stage_name = "family";
  cfg.per_class = 4;
  cfg.base_seed = 600;
  cfg.train.adam.lr = 1e-3;
  cfg.train.epochs = 2;
  cfg.train.k_folds = 2;
  cfg.train.seed = 9;

  NoiseScenario clean;
  NoiseScenario one_process;
  one_process.background = {BackgroundKind::matmul};
  cfg.scenarios = {clean, one_process};

  RobustnessReport report = evaluate_robustness(cfg);
  CHECK(report.stage == "family");
  REQUIRE(report.scenarios.size() == 2u);
  CHECK(report.clean.fold_accuracy.size() == 2u);

  // Scenario 0 rebuilds the identical clean traces, so the held-out score
  // cannot move: the drop is exactly zero.
  CHECK(report.scenarios[0].drop_vs_clean == 0.0);
  CHECK(report.scenarios[0].report.mean_accuracy == report.clean.mean_accuracy);
  CHECK(report.scenarios[1].report.stage == "family + matmul");
  CHECK(report.scenarios[1].drop_vs_clean ==
        report.clean.mean_accuracy - report.scenarios[1].report.mean_accuracy);

  // Same invariant under the retrain-per-scenario protocol.
  cfg.train_noisy = true;
  RobustnessReport retrained = evaluate_robustness(cfg);
  CHECK(retrained.scenarios[0].drop_vs_clean == 0.0);
}
