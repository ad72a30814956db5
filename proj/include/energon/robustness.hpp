#pragma once

#include <string>
#include <vector>

#include "energon/simulate.hpp"
#include "energon/training.hpp"

namespace energon {

// Train-clean / test-noisy protocol (optionally flipped): fold models are
// fitted once on the clean dataset; every noise scenario rebuilds the same
// traces (same per-trace seeds, so the same workload jitter) with the
// backgrounds added, and each fold model is scored on its held-out indices.
struct ScenarioResult {
  NoiseScenario scenario;
  EvalReport report;
  double drop_vs_clean = 0.0;  // clean mean accuracy - scenario mean accuracy
};

struct RobustnessReport {
  std::string stage;
  EvalReport clean;
  std::vector<ScenarioResult> scenarios;
};

struct RobustnessConfig {
  LabelTaxonomy taxonomy;
  std::string stage_name;  // which taxonomy stage is classified
  int per_class = 100;
  PowerModelParams power = PowerModelParams::registry_scale();
  ThermalModelParams thermal = ThermalModelParams::registry_scale();
  double sample_rate_hz = 7.0;
  double duration_s = 120.0;
  std::uint64_t base_seed = 0;
  TrainConfig train;
  std::vector<NoiseScenario> scenarios;  // empty -> default ladder
  bool train_noisy = false;  // flip: retrain per scenario, score noisy held-out folds
};

// Default ladder: one process, then two, then three distinct kinds
// ([matmul], [matmul, cnn_classify], [matmul, cnn_classify, vit_inference]).
std::vector<NoiseScenario> default_noise_ladder();

RobustnessReport evaluate_robustness(const RobustnessConfig& cfg);

}  // namespace energon
