#pragma once

#include <string>
#include <vector>

#include "energon/trace.hpp"

namespace energon {

// What a classifier stage discriminates on.
enum class StageCriterion { family, heads, layers };

const char* to_string(StageCriterion c);
StageCriterion criterion_from_string(const std::string& s);

// One classification stage. The root stage (empty parent_class) partitions
// every leaf; a refinement stage partitions the leaves of exactly one root
// class.
struct TaxonomyStage {
  std::string name;
  std::string parent_class;  // empty for the root stage
  StageCriterion criterion = StageCriterion::family;
  std::vector<std::string> classes;  // fixed order defines class ids
};

// Two-level label tree: root stage plus one refinement stage per root class
// that holds more than one leaf. Every leaf is reachable by exactly one
// root-to-leaf path.
struct LabelTaxonomy {
  std::string name;
  std::vector<Label> leaves;
  std::vector<TaxonomyStage> stages;  // stages[0] is the root stage

  const TaxonomyStage& root_stage() const { return stages.front(); }

  // The stage refining `root_class`, or nullptr when that class holds a
  // single leaf and routes directly.
  const TaxonomyStage* refinement_for(const std::string& root_class) const;

  // The class a label falls into within `stage` (its criterion value).
  std::string class_of(const TaxonomyStage& stage, const Label& l) const;

  // Class index within the stage; DataError if the label is outside it.
  int class_index(const TaxonomyStage& stage, const Label& l) const;

  const TaxonomyStage& stage_by_name(const std::string& stage_name) const;

  std::vector<Label> leaves_in_root_class(const std::string& root_class) const;

  // True when (family, model_name) is one of the leaves.
  bool contains(const Label& l) const;

  // Checks partition/uniqueness invariants; returns violations.
  std::vector<std::string> validate() const;
};

// Built-in taxonomies over the model registry:
//  "language": family -> {T5 by heads, META by layers}, single-leaf
//              MarianMT / GoogleLang route directly.
//  "vision":   family -> per-family head count, single-leaf AppleViT.
//  "custom":   head count -> per-head-class layer count.
const LabelTaxonomy& builtin_taxonomy(const std::string& name);
std::vector<std::string> builtin_taxonomy_names();

}  // namespace energon
