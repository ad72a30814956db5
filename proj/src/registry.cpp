#include "energon/registry.hpp"

#include <map>

#include "energon/errors.hpp"

namespace energon {

namespace {

std::vector<ModelConfig> build_registry() {
  std::vector<ModelConfig> r;
  auto lang = [&](Family f, int layers, int heads, int dim, const std::string& name) {
    r.push_back({f, Modality::language, layers, layers, heads, dim, name});
  };
  auto vision = [&](Family f, int enc, int heads, int dim, const std::string& name) {
    r.push_back({f, Modality::vision, enc, 0, heads, dim, name});
  };

  // Pre-trained language rows.
  lang(Family::T5, 6, 8, 512, "t5-small");
  lang(Family::T5, 12, 12, 768, "t5-base");
  lang(Family::T5, 24, 16, 1024, "t5-large");
  lang(Family::T5, 24, 32, 1024, "t5-3b");
  lang(Family::MarianMT, 6, 8, 512, "Helsinki-NLP/opus-mt-en-fr");
  lang(Family::META, 12, 16, 1024, "facebook/nllb-200-distilled-600M");
  lang(Family::META, 24, 16, 1024, "facebook/nllb-200-distilled-1.3B");
  lang(Family::GoogleLang, 32, 16, 1024, "madlad400-3b-mt");

  // Pre-trained vision rows.
  vision(Family::GoogleViT, 12, 12, 768, "vit-base-patch16-224");
  vision(Family::GoogleViT, 24, 16, 1024, "vit-large-patch16-225");
  vision(Family::AppleViT, 12, 4, 384, "mobilevit-small");
  vision(Family::MetaViT, 12, 3, 192, "deit-tiny-distilled-patch16-224");
  vision(Family::MetaViT, 12, 6, 384, "deit-small-distilled-patch16-224");
  vision(Family::MetaViT, 12, 12, 768, "deit-base-distilled-patch16-224");
  vision(Family::MicrosoftViT, 12, 3, 96, "swin-tiny-patch4-window7-224");
  vision(Family::MicrosoftViT, 12, 12, 768, "swin-base-patch4-window7-224");

  // Custom encoder-decoder sweep (embedding fixed at 512).
  const int custom_layers[] = {6, 12, 12, 12, 24, 32, 48, 24, 32};
  const int custom_heads[] = {8, 8, 12, 16, 16, 16, 16, 32, 32};
  for (int i = 0; i < 9; ++i) {
    const std::string name = "custom-" + std::to_string(custom_layers[i]) + "x" +
                             std::to_string(custom_heads[i]);
    r.push_back({Family::Custom, Modality::language, custom_layers[i],
                 custom_layers[i], custom_heads[i], 512, name});
  }
  return r;
}

std::map<std::string, std::string> build_aliases() {
  std::map<std::string, std::string> a;
  a["opus-mt-en-fr"] = "Helsinki-NLP/opus-mt-en-fr";
  a["nllb-200-distilled-600M"] = "facebook/nllb-200-distilled-600M";
  a["nllb-600m"] = "facebook/nllb-200-distilled-600M";
  a["nllb-200-distilled-1.3B"] = "facebook/nllb-200-distilled-1.3B";
  a["nllb-1.3b"] = "facebook/nllb-200-distilled-1.3B";
  a["google/vit-base"] = "vit-base-patch16-224";
  a["vit-base"] = "vit-base-patch16-224";
  a["google/vit-large"] = "vit-large-patch16-225";
  a["vit-large"] = "vit-large-patch16-225";
  a["apple/mobilevit-small"] = "mobilevit-small";
  a["deit-tiny"] = "deit-tiny-distilled-patch16-224";
  a["meta/deit-tiny"] = "deit-tiny-distilled-patch16-224";
  a["deit-small"] = "deit-small-distilled-patch16-224";
  a["meta/deit-small"] = "deit-small-distilled-patch16-224";
  a["deit-base"] = "deit-base-distilled-patch16-224";
  a["meta/deit-base"] = "deit-base-distilled-patch16-224";
  a["swin-tiny"] = "swin-tiny-patch4-window7-224";
  a["microsoft/swin-tiny"] = "swin-tiny-patch4-window7-224";
  a["swin-base"] = "swin-base-patch4-window7-224";
  a["microsoft/swin-base"] = "swin-base-patch4-window7-224";
  // "6/8" style shorthand for the custom sweep.
  const int custom_layers[] = {6, 12, 12, 12, 24, 32, 48, 24, 32};
  const int custom_heads[] = {8, 8, 12, 16, 16, 16, 16, 32, 32};
  for (int i = 0; i < 9; ++i) {
    const std::string lx = std::to_string(custom_layers[i]);
    const std::string hx = std::to_string(custom_heads[i]);
    a[lx + "/" + hx] = "custom-" + lx + "x" + hx;
  }
  return a;
}

}  // namespace

const std::vector<ModelConfig>& model_registry() {
  static const std::vector<ModelConfig> registry = build_registry();
  return registry;
}

const ModelConfig& registry_lookup(const std::string& name) {
  static const std::map<std::string, std::string> aliases = build_aliases();
  const auto& reg = model_registry();

  std::string canonical = name;
  if (auto it = aliases.find(name); it != aliases.end()) canonical = it->second;
  for (const auto& row : reg)
    if (row.name == canonical) return row;

  std::string msg = "unknown model name: '" + name + "'. Registered names:";
  for (const auto& row : reg) msg += "\n  " + row.name;
  throw DataError(msg);
}

}  // namespace energon
