#include "energon/hierarchy.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "energon/errors.hpp"
#include "energon/features.hpp"
#include "energon/rng.hpp"
#include "energon/trace_io.hpp"

namespace energon {

namespace {

void require_valid(const LabelTaxonomy& taxonomy) {
  const auto violations = taxonomy.validate();
  if (!violations.empty()) {
    std::string msg = "taxonomy '" + taxonomy.name + "' is inconsistent:";
    for (const auto& v : violations) msg += "\n  " + v;
    throw DataError(msg);
  }
}

}  // namespace

void HierarchicalPredictor::validate() const {
  require_valid(taxonomy);
  const TaxonomyStage& root = taxonomy.root_stage();
  if (root_model.spec.n_classes != static_cast<int>(root.classes.size()))
    throw DataError("root model classifies " +
                    std::to_string(root_model.spec.n_classes) +
                    " classes, root stage has " + std::to_string(root.classes.size()));
  for (const auto& cls : root.classes) {
    const TaxonomyStage* refinement = taxonomy.refinement_for(cls);
    if (!refinement) continue;
    auto it = branch_models.find(cls);
    if (it == branch_models.end())
      throw DataError("missing branch model for root class '" + cls + "'");
    if (it->second.spec.n_classes != static_cast<int>(refinement->classes.size()))
      throw DataError("branch model for '" + cls + "' classifies " +
                      std::to_string(it->second.spec.n_classes) +
                      " classes, stage '" + refinement->name + "' has " +
                      std::to_string(refinement->classes.size()));
  }
}

HierarchicalPredictor train_hierarchical(const LabelTaxonomy& taxonomy,
                                         const TraceDataset& ds,
                                         const CnnSpec& base_spec,
                                         const TrainConfig& cfg) {
  require_valid(taxonomy);
  if (ds.traces.empty()) throw DataError("dataset is empty");

  std::vector<FeatureTensor> features =
      batch_features(ds.traces, base_spec.input_length);
  for (std::size_t i = 0; i < features.size(); ++i)
    if (!features[i].label)
      throw DataError("trace " + std::to_string(i) + " carries no label");

  HierarchicalPredictor predictor;
  predictor.taxonomy = taxonomy;
  const TaxonomyStage& root = taxonomy.root_stage();

  Batch root_x;
  std::vector<int> root_y;
  root_x.reserve(features.size());
  for (const auto& f : features) {
    root_x.push_back(f.values);
    root_y.push_back(taxonomy.class_index(root, *f.label));
  }
  CnnSpec root_spec = base_spec;
  root_spec.n_classes = static_cast<int>(root.classes.size());
  predictor.root_model = train(root_spec, root_x, root_y, cfg).model;

  for (std::size_t c = 0; c < root.classes.size(); ++c) {
    const std::string& cls = root.classes[c];
    const TaxonomyStage* refinement = taxonomy.refinement_for(cls);
    if (!refinement) continue;

    Batch branch_x;
    std::vector<int> branch_y;
    for (std::size_t i = 0; i < features.size(); ++i) {
      if (root_y[i] != static_cast<int>(c)) continue;
      branch_x.push_back(features[i].values);
      branch_y.push_back(taxonomy.class_index(*refinement, *features[i].label));
    }
    if (branch_x.empty())
      throw DataError("no traces for root class '" + cls + "'");

    CnnSpec branch_spec = base_spec;
    branch_spec.n_classes = static_cast<int>(refinement->classes.size());
    TrainConfig branch_cfg = cfg;
    branch_cfg.seed = splitmix64(cfg.seed + c + 1);
    predictor.branch_models[cls] = train(branch_spec, branch_x, branch_y, branch_cfg).model;
  }

  predictor.validate();
  return predictor;
}

HierarchicalPrediction predict_hierarchical(HierarchicalPredictor& predictor,
                                            const Trace& trace) {
  const TaxonomyStage& root = predictor.taxonomy.root_stage();
  FeatureTensor f = preprocess(trace, predictor.root_model.spec.input_length);
  Batch one{f.values};

  const Eigen::MatrixXd root_probs = forward(predictor.root_model, one, false);
  int root_idx = 0;
  for (Eigen::Index c = 1; c < root_probs.cols(); ++c)
    if (root_probs(0, c) > root_probs(0, root_idx)) root_idx = static_cast<int>(c);

  HierarchicalPrediction out;
  out.root_class = root.classes[static_cast<std::size_t>(root_idx)];
  out.root_confidence = root_probs(0, root_idx);

  const TaxonomyStage* refinement = predictor.taxonomy.refinement_for(out.root_class);
  const std::vector<Label> leaves =
      predictor.taxonomy.leaves_in_root_class(out.root_class);
  if (!refinement) {
    if (leaves.size() != 1)
      throw DataError("root class '" + out.root_class +
                      "' has no refinement stage but holds " +
                      std::to_string(leaves.size()) + " leaves");
    out.leaf = leaves.front();
    out.branch_confidence = 1.0;
    return out;
  }

  auto it = predictor.branch_models.find(out.root_class);
  if (it == predictor.branch_models.end())
    throw DataError("missing branch model for root class '" + out.root_class + "'");
  const Eigen::MatrixXd branch_probs = forward(it->second, one, false);
  int branch_idx = 0;
  for (Eigen::Index c = 1; c < branch_probs.cols(); ++c)
    if (branch_probs(0, c) > branch_probs(0, branch_idx))
      branch_idx = static_cast<int>(c);
  out.branch_confidence = branch_probs(0, branch_idx);

  const std::string& branch_class =
      refinement->classes[static_cast<std::size_t>(branch_idx)];
  for (const Label& leaf : leaves) {
    if (predictor.taxonomy.class_of(*refinement, leaf) == branch_class) {
      out.leaf = leaf;
      return out;
    }
  }
  throw DataError("no leaf under '" + out.root_class + "' matches class '" +
                  branch_class + "'");
}

void save_predictor(const std::string& dir, const HierarchicalPredictor& p) {
  p.validate();
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create predictor directory: " + dir);

  std::ostringstream meta;
  meta << "energon-predictor-v1\n";
  meta << "taxonomy=" << p.taxonomy.name << "\n";
  meta << "root=root.ckpt\n";

  CheckpointInfo root_info;
  root_info.stage = p.taxonomy.root_stage().name;
  root_info.taxonomy = p.taxonomy.name;
  root_info.classes = p.taxonomy.root_stage().classes;
  save_checkpoint(dir + "/root.ckpt", p.root_model, root_info);

  for (const auto& [cls, model] : p.branch_models) {
    const TaxonomyStage* refinement = p.taxonomy.refinement_for(cls);
    const std::string file = "branch_" + sanitize_for_filename(cls) + ".ckpt";
    meta << "branch." << cls << "=" << file << "\n";
    CheckpointInfo info;
    info.stage = refinement->name;
    info.taxonomy = p.taxonomy.name;
    info.classes = refinement->classes;
    save_checkpoint(dir + "/" + file, model, info);
  }

  std::ofstream out(dir + "/predictor.meta", std::ios::trunc);
  if (!out) throw DataError("cannot write predictor metadata in " + dir);
  out << meta.str();
  out.flush();
  if (!out) throw DataError("short write on predictor metadata in " + dir);
}

HierarchicalPredictor load_predictor(const std::string& dir) {
  std::ifstream in(dir + "/predictor.meta");
  if (!in) throw DataError("cannot open predictor metadata: " + dir + "/predictor.meta");
  std::string line;
  if (!std::getline(in, line) || line != "energon-predictor-v1")
    throw DataError("not a predictor directory: " + dir);

  std::string taxonomy_name, root_file;
  std::map<std::string, std::string> branch_files;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw DataError("malformed predictor metadata line: " + line);
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "taxonomy") taxonomy_name = value;
    else if (key == "root") root_file = value;
    else if (key.rfind("branch.", 0) == 0) branch_files[key.substr(7)] = value;
    else throw DataError("unknown predictor metadata key: " + key);
  }
  if (taxonomy_name.empty() || root_file.empty())
    throw DataError("predictor metadata lacks taxonomy or root entries");

  HierarchicalPredictor p;
  p.taxonomy = builtin_taxonomy(taxonomy_name);

  LoadedCheckpoint root = load_checkpoint(dir + "/" + root_file);
  if (root.info.classes != p.taxonomy.root_stage().classes)
    throw DataError("root checkpoint classes do not match taxonomy '" +
                    taxonomy_name + "'");
  p.root_model = std::move(root.model);

  for (const auto& [cls, file] : branch_files) {
    LoadedCheckpoint branch = load_checkpoint(dir + "/" + file);
    const TaxonomyStage* refinement = p.taxonomy.refinement_for(cls);
    if (!refinement)
      throw DataError("branch checkpoint for '" + cls +
                      "', but that class routes directly");
    if (branch.info.classes != refinement->classes)
      throw DataError("branch checkpoint classes for '" + cls +
                      "' do not match stage '" + refinement->name + "'");
    p.branch_models[cls] = std::move(branch.model);
  }
  p.validate();
  return p;
}

}  // namespace energon
