#pragma once

#include <string>
#include <vector>

#include "energon/trace.hpp"

namespace energon {

// Architecture row of a target model. Vision rows have decoders == 0.
struct ModelConfig {
  Family family = Family::Custom;
  Modality modality = Modality::language;
  int encoders = 0;
  int decoders = 0;
  int attention_heads = 0;
  int embedding_dim = 0;
  std::string name;

  Label label() const {
    return Label{family, name, attention_heads, encoders};
  }
};

// The 25 built-in target configurations: 8 pre-trained language rows,
// 8 pre-trained vision rows, 9 custom language rows (embedding 512,
// named custom-<layers>x<heads>).
const std::vector<ModelConfig>& model_registry();

// Exact-name lookup with a short-alias fallback (e.g. "deit-base",
// "google/vit-large", "custom-12x16", "12/16"). Unknown names raise
// DataError listing every registered name.
const ModelConfig& registry_lookup(const std::string& name);

}  // namespace energon
