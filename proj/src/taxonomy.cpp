#include "energon/taxonomy.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "energon/errors.hpp"
#include "energon/registry.hpp"

namespace energon {

const char* to_string(StageCriterion c) {
  switch (c) {
    case StageCriterion::family: return "family";
    case StageCriterion::heads: return "heads";
    case StageCriterion::layers: return "layers";
  }
  return "family";
}

StageCriterion criterion_from_string(const std::string& s) {
  if (s == "family") return StageCriterion::family;
  if (s == "heads") return StageCriterion::heads;
  if (s == "layers") return StageCriterion::layers;
  throw DataError("unknown stage criterion: " + s);
}

const TaxonomyStage* LabelTaxonomy::refinement_for(const std::string& root_class) const {
  for (std::size_t i = 1; i < stages.size(); ++i)
    if (stages[i].parent_class == root_class) return &stages[i];
  return nullptr;
}

std::string LabelTaxonomy::class_of(const TaxonomyStage& stage, const Label& l) const {
  switch (stage.criterion) {
    case StageCriterion::family: return to_string(l.family);
    case StageCriterion::heads: return std::to_string(l.attention_heads);
    case StageCriterion::layers: return std::to_string(l.layers);
  }
  return {};
}

int LabelTaxonomy::class_index(const TaxonomyStage& stage, const Label& l) const {
  const std::string c = class_of(stage, l);
  const auto it = std::find(stage.classes.begin(), stage.classes.end(), c);
  if (it == stage.classes.end())
    throw DataError("label " + l.model_name + " falls outside stage '" +
                    stage.name + "' (class " + c + ")");
  return static_cast<int>(it - stage.classes.begin());
}

const TaxonomyStage& LabelTaxonomy::stage_by_name(const std::string& stage_name) const {
  for (const auto& s : stages)
    if (s.name == stage_name) return s;
  std::string msg = "unknown stage '" + stage_name + "' in taxonomy '" + name +
                    "'. Stages:";
  for (const auto& s : stages) msg += " " + s.name;
  throw DataError(msg);
}

std::vector<Label> LabelTaxonomy::leaves_in_root_class(const std::string& root_class) const {
  std::vector<Label> out;
  for (const auto& leaf : leaves)
    if (class_of(root_stage(), leaf) == root_class) out.push_back(leaf);
  return out;
}

bool LabelTaxonomy::contains(const Label& l) const {
  return std::any_of(leaves.begin(), leaves.end(), [&](const Label& x) {
    return x.family == l.family && x.model_name == l.model_name;
  });
}

std::vector<std::string> LabelTaxonomy::validate() const {
  std::vector<std::string> v;
  if (stages.empty() || !stages[0].parent_class.empty()) {
    v.push_back("taxonomy must start with a root stage (empty parent_class)");
    return v;
  }
  const auto& root = root_stage();

  // Root stage partitions every leaf.
  for (const auto& leaf : leaves) {
    const std::string c = class_of(root, leaf);
    if (std::find(root.classes.begin(), root.classes.end(), c) == root.classes.end())
      v.push_back("leaf " + leaf.model_name + " falls outside the root stage");
  }

  // Each refinement belongs to one root class; within it every leaf lands in
  // exactly one class and no two leaves share a class (unique paths).
  for (std::size_t i = 1; i < stages.size(); ++i) {
    const auto& st = stages[i];
    if (std::find(root.classes.begin(), root.classes.end(), st.parent_class) ==
        root.classes.end())
      v.push_back("stage " + st.name + " refines unknown class " + st.parent_class);
    std::set<std::string> seen;
    for (const auto& leaf : leaves_in_root_class(st.parent_class)) {
      const std::string c = class_of(st, leaf);
      if (std::find(st.classes.begin(), st.classes.end(), c) == st.classes.end())
        v.push_back("leaf " + leaf.model_name + " falls outside stage " + st.name);
      if (!seen.insert(c).second)
        v.push_back("stage " + st.name + " class " + c + " holds more than one leaf");
    }
  }

  // Multi-leaf root classes need a refinement stage.
  for (const auto& c : root.classes) {
    const auto in_class = leaves_in_root_class(c);
    if (in_class.size() > 1 && refinement_for(c) == nullptr)
      v.push_back("root class " + c + " holds " + std::to_string(in_class.size()) +
                  " leaves but no refinement stage");
  }

  // Leaf names unique.
  std::set<std::string> names;
  for (const auto& leaf : leaves)
    if (!names.insert(leaf.model_name).second)
      v.push_back("duplicate leaf " + leaf.model_name);
  return v;
}

namespace {

Label leaf(const std::string& registry_name) {
  return registry_lookup(registry_name).label();
}

LabelTaxonomy build_language() {
  LabelTaxonomy t;
  t.name = "language";
  t.leaves = {leaf("t5-small"),
              leaf("t5-base"),
              leaf("t5-large"),
              leaf("t5-3b"),
              leaf("Helsinki-NLP/opus-mt-en-fr"),
              leaf("facebook/nllb-200-distilled-600M"),
              leaf("facebook/nllb-200-distilled-1.3B"),
              leaf("madlad400-3b-mt")};
  t.stages = {
      {"family", "", StageCriterion::family, {"T5", "MarianMT", "META", "GoogleLang"}},
      {"t5-heads", "T5", StageCriterion::heads, {"8", "12", "16", "32"}},
      {"meta-layers", "META", StageCriterion::layers, {"12", "24"}},
  };
  return t;
}

LabelTaxonomy build_vision() {
  LabelTaxonomy t;
  t.name = "vision";
  t.leaves = {leaf("vit-base-patch16-224"),
              leaf("vit-large-patch16-225"),
              leaf("mobilevit-small"),
              leaf("deit-tiny-distilled-patch16-224"),
              leaf("deit-small-distilled-patch16-224"),
              leaf("deit-base-distilled-patch16-224"),
              leaf("swin-tiny-patch4-window7-224"),
              leaf("swin-base-patch4-window7-224")};
  t.stages = {
      {"family", "", StageCriterion::family,
       {"GoogleViT", "AppleViT", "MetaViT", "MicrosoftViT"}},
      {"google-heads", "GoogleViT", StageCriterion::heads, {"12", "16"}},
      {"meta-heads", "MetaViT", StageCriterion::heads, {"3", "6", "12"}},
      {"microsoft-heads", "MicrosoftViT", StageCriterion::heads, {"3", "12"}},
  };
  return t;
}

LabelTaxonomy build_custom() {
  LabelTaxonomy t;
  t.name = "custom";
  for (const auto& row : model_registry())
    if (row.family == Family::Custom) t.leaves.push_back(row.label());
  t.stages = {
      {"heads", "", StageCriterion::heads, {"8", "12", "16", "32"}},
      {"layers-8h", "8", StageCriterion::layers, {"6", "12"}},
      {"layers-16h", "16", StageCriterion::layers, {"12", "24", "32", "48"}},
      {"layers-32h", "32", StageCriterion::layers, {"24", "32"}},
  };
  return t;
}

}  // namespace

const LabelTaxonomy& builtin_taxonomy(const std::string& name) {
  static const std::map<std::string, LabelTaxonomy> all = {
      {"language", build_language()},
      {"vision", build_vision()},
      {"custom", build_custom()},
  };
  const auto it = all.find(name);
  if (it == all.end()) {
    std::string msg = "unknown taxonomy: " + name + ". Available:";
    for (const auto& [k, _] : all) msg += " " + k;
    throw DataError(msg);
  }
  return it->second;
}

std::vector<std::string> builtin_taxonomy_names() {
  return {"language", "vision", "custom"};
}

}  // namespace energon
