#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace energon {

// ---- model identity ----------------------------------------------------

enum class Family {
  T5,
  MarianMT,
  META,
  GoogleLang,
  Custom,
  GoogleViT,
  AppleViT,
  MetaViT,
  MicrosoftViT,
};

enum class Modality { language, vision };

const char* to_string(Family f);
const char* to_string(Modality m);
Family family_from_string(const std::string& s);
Modality modality_from_string(const std::string& s);

// Class label carried by a trace: the architecture facts the classifier
// stages discriminate on, plus the leaf name.
struct Label {
  Family family = Family::Custom;
  std::string model_name;
  int attention_heads = 0;
  int layers = 0;  // encoder blocks; equals decoder blocks for language rows

  bool operator==(const Label&) const = default;
};

// ---- background-noise scenario ------------------------------------------

enum class BackgroundKind { matmul, cnn_classify, vit_inference };

const char* to_string(BackgroundKind k);
BackgroundKind background_kind_from_string(const std::string& s);

struct NoiseScenario {
  static constexpr int kMaxProcesses = 8;

  std::vector<BackgroundKind> background;  // empty = clean

  int count() const { return static_cast<int>(background.size()); }

  // Comma-joined kind names; "" for clean.
  std::string to_string() const;
  static NoiseScenario parse(const std::string& csv);
};

// ---- trace --------------------------------------------------------------

enum class TraceSource { synthetic, live, replay };

const char* to_string(TraceSource s);
TraceSource source_from_string(const std::string& s);

struct TraceMeta {
  TraceSource source = TraceSource::synthetic;
  std::string gpu_name;
  double base_temp_c = 28.0;
  std::optional<Label> label;
  std::optional<NoiseScenario> scenario;
  std::optional<std::uint64_t> seed;           // required when synthetic
  std::optional<double> max_tick_jitter_s;     // recorded by the sampler
};

// A power/thermal side-channel recording. Channels are sampled on a common
// clock; a channel the backend could not provide is marked absent via its
// flag (never by a sentinel value).
struct Trace {
  double sample_rate_hz = 7.0;
  double duration_s = 120.0;
  Eigen::ArrayXd power_w;
  Eigen::ArrayXd temp_c;
  bool has_power = true;
  bool has_temp = true;
  TraceMeta meta;

  Eigen::Index samples() const { return has_power ? power_w.size() : temp_c.size(); }
};

// round(rate * duration), the pinned sample-count rule.
inline Eigen::Index expected_samples(double rate_hz, double duration_s) {
  return static_cast<Eigen::Index>(std::llround(rate_hz * duration_s));
}

// Returns human-readable violations; empty means the trace is well-formed.
// Checks: positive rate/duration, channel presence, equal channel lengths,
// length == round(rate*duration), power >= 0, temp within [-50, 150],
// synthetic traces carry a seed.
std::vector<std::string> validate_trace(const Trace& t);

}  // namespace energon
