#pragma once

#include <map>
#include <string>
#include <vector>

#include "energon/checkpoint.hpp"
#include "energon/dataset.hpp"
#include "energon/taxonomy.hpp"
#include "energon/training.hpp"

namespace energon {

// Two-stage classifier over a LabelTaxonomy: a root-stage model plus one
// refinement model per root class holding more than one leaf; single-leaf
// classes route directly with confidence 1.
struct HierarchicalPredictor {
  LabelTaxonomy taxonomy;
  CnnModel root_model;
  std::map<std::string, CnnModel> branch_models;  // root class -> model

  void validate() const;  // every multi-leaf class has a branch model
};

struct HierarchicalPrediction {
  Label leaf;
  std::string root_class;
  double root_confidence = 0.0;
  double branch_confidence = 0.0;  // 1.0 for single-leaf routes
};

HierarchicalPredictor train_hierarchical(const LabelTaxonomy& taxonomy,
                                         const TraceDataset& ds,
                                         const CnnSpec& base_spec,
                                         const TrainConfig& cfg);

HierarchicalPrediction predict_hierarchical(HierarchicalPredictor& predictor,
                                            const Trace& trace);

// Predictor directory: predictor.meta + one checkpoint per stage.
void save_predictor(const std::string& dir, const HierarchicalPredictor& p);
HierarchicalPredictor load_predictor(const std::string& dir);

}  // namespace energon
