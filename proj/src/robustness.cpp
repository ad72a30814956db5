#include "energon/robustness.hpp"

#include "energon/errors.hpp"
#include "energon/features.hpp"
#include "energon/registry.hpp"

namespace energon {

std::vector<NoiseScenario> default_noise_ladder() {
  std::vector<NoiseScenario> ladder(3);
  ladder[0].background = {BackgroundKind::matmul};
  ladder[1].background = {BackgroundKind::matmul, BackgroundKind::cnn_classify};
  ladder[2].background = {BackgroundKind::matmul, BackgroundKind::cnn_classify,
                          BackgroundKind::vit_inference};
  return ladder;
}

namespace {

// Builds per-leaf traces for one stage. The seed layout depends only on the
// leaf order and per_class, so rebuilding with a different scenario keeps
// every trace's workload jitter stream unchanged.
Batch build_stage_features(const RobustnessConfig& cfg, const TaxonomyStage& stage,
                           const std::vector<Label>& leaves,
                           const NoiseScenario& scenario, std::vector<int>* labels) {
  std::vector<Trace> traces;
  traces.reserve(leaves.size() * static_cast<std::size_t>(cfg.per_class));
  if (labels) labels->clear();
  for (std::size_t c = 0; c < leaves.size(); ++c) {
    const ModelConfig& model = registry_lookup(leaves[c].model_name);
    for (int i = 0; i < cfg.per_class; ++i) {
      const std::uint64_t seed =
          cfg.base_seed +
          static_cast<std::uint64_t>(c) * static_cast<std::uint64_t>(cfg.per_class) +
          static_cast<std::uint64_t>(i);
      traces.push_back(synthesize_trace(model, scenario, cfg.power, cfg.thermal,
                                        cfg.sample_rate_hz, cfg.duration_s, seed));
      if (labels)
        labels->push_back(cfg.taxonomy.class_index(stage, *traces.back().meta.label));
    }
  }
  const auto n = expected_samples(cfg.sample_rate_hz, cfg.duration_s);
  std::vector<FeatureTensor> features = batch_features(traces, n);
  Batch x;
  x.reserve(features.size());
  for (auto& f : features) x.push_back(std::move(f.values));
  return x;
}

// Scores already-trained fold models on their held-out indices drawn from a
// (possibly perturbed) rebuild of the same dataset.
EvalReport score_folds(std::vector<CnnModel>& models,
                       const std::vector<std::vector<int>>& folds, const Batch& x,
                       const std::vector<int>& y,
                       const std::vector<std::string>& classes,
                       const std::string& stage_name) {
  EvalReport report;
  report.stage = stage_name;
  report.classes = classes;
  const auto k = static_cast<int>(classes.size());
  report.confusion = Eigen::MatrixXi::Zero(k, k);
  for (std::size_t f = 0; f < folds.size(); ++f) {
    Batch held;
    held.reserve(folds[f].size());
    for (int i : folds[f]) held.push_back(x[static_cast<std::size_t>(i)]);
    const std::vector<int> pred = predict_classes(models[f], held);
    int hits = 0;
    for (std::size_t i = 0; i < folds[f].size(); ++i) {
      const int truth = y[static_cast<std::size_t>(folds[f][i])];
      report.confusion(truth, pred[i]) += 1;
      if (pred[i] == truth) ++hits;
    }
    report.fold_accuracy.push_back(
        folds[f].empty()
            ? 0.0
            : static_cast<double>(hits) / static_cast<double>(folds[f].size()));
  }
  report.finalize();
  return report;
}

}  // namespace

RobustnessReport evaluate_robustness(const RobustnessConfig& cfg) {
  if (cfg.per_class < 1) throw DataError("per_class must be >= 1");
  const TaxonomyStage& stage = cfg.taxonomy.stage_by_name(cfg.stage_name);
  const std::vector<Label> leaves =
      stage.parent_class.empty()
          ? cfg.taxonomy.leaves
          : cfg.taxonomy.leaves_in_root_class(stage.parent_class);
  if (leaves.empty()) throw DataError("stage '" + cfg.stage_name + "' holds no leaves");

  CnnSpec spec;
  spec.n_classes = static_cast<int>(stage.classes.size());
  spec.input_length =
      static_cast<int>(expected_samples(cfg.sample_rate_hz, cfg.duration_s));

  std::vector<int> labels;
  const NoiseScenario clean_scenario;  // no background processes
  Batch clean_x = build_stage_features(cfg, stage, leaves, clean_scenario, &labels);

  RobustnessReport out;
  out.stage = stage.name;
  CvDetail clean_detail = cross_validate_detail(spec, clean_x, labels, stage.classes,
                                                cfg.train, stage.name);
  out.clean = clean_detail.report;

  std::vector<NoiseScenario> ladder =
      cfg.scenarios.empty() ? default_noise_ladder() : cfg.scenarios;
  for (const NoiseScenario& scenario : ladder) {
    Batch noisy_x = build_stage_features(cfg, stage, leaves, scenario, nullptr);
    ScenarioResult result;
    result.scenario = scenario;
    const std::string name = stage.name + " + " + scenario.to_string();
    if (cfg.train_noisy) {
      CvDetail noisy_detail = cross_validate_detail(spec, noisy_x, labels,
                                                    stage.classes, cfg.train, name);
      result.report = noisy_detail.report;
    } else {
      result.report = score_folds(clean_detail.fold_models, clean_detail.folds,
                                  noisy_x, labels, stage.classes, name);
    }
    result.drop_vs_clean = out.clean.mean_accuracy - result.report.mean_accuracy;
    out.scenarios.push_back(std::move(result));
  }
  return out;
}

}  // namespace energon
