#include "energon/trace.hpp"

#include <sstream>

#include "energon/errors.hpp"

namespace energon {

const char* to_string(Family f) {
  switch (f) {
    case Family::T5: return "T5";
    case Family::MarianMT: return "MarianMT";
    case Family::META: return "META";
    case Family::GoogleLang: return "GoogleLang";
    case Family::Custom: return "Custom";
    case Family::GoogleViT: return "GoogleViT";
    case Family::AppleViT: return "AppleViT";
    case Family::MetaViT: return "MetaViT";
    case Family::MicrosoftViT: return "MicrosoftViT";
  }
  return "Custom";
}

Family family_from_string(const std::string& s) {
  for (Family f : {Family::T5, Family::MarianMT, Family::META, Family::GoogleLang,
                   Family::Custom, Family::GoogleViT, Family::AppleViT,
                   Family::MetaViT, Family::MicrosoftViT}) {
    if (s == to_string(f)) return f;
  }
  throw DataError("unknown family: " + s);
}

const char* to_string(Modality m) {
  return m == Modality::language ? "language" : "vision";
}

Modality modality_from_string(const std::string& s) {
  if (s == "language") return Modality::language;
  if (s == "vision") return Modality::vision;
  throw DataError("unknown modality: " + s);
}

const char* to_string(BackgroundKind k) {
  switch (k) {
    case BackgroundKind::matmul: return "matmul";
    case BackgroundKind::cnn_classify: return "cnn_classify";
    case BackgroundKind::vit_inference: return "vit_inference";
  }
  return "matmul";
}

BackgroundKind background_kind_from_string(const std::string& s) {
  if (s == "matmul") return BackgroundKind::matmul;
  if (s == "cnn_classify" || s == "cnn") return BackgroundKind::cnn_classify;
  if (s == "vit_inference" || s == "vit") return BackgroundKind::vit_inference;
  throw DataError("unknown background kind: " + s);
}

std::string NoiseScenario::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < background.size(); ++i) {
    if (i) out += ',';
    out += energon::to_string(background[i]);
  }
  return out;
}

NoiseScenario NoiseScenario::parse(const std::string& csv) {
  NoiseScenario s;
  std::string token;
  std::istringstream in(csv);
  while (std::getline(in, token, ',')) {
    // trim spaces
    const auto a = token.find_first_not_of(" \t");
    const auto b = token.find_last_not_of(" \t");
    if (a == std::string::npos) continue;
    s.background.push_back(background_kind_from_string(token.substr(a, b - a + 1)));
  }
  if (s.count() > NoiseScenario::kMaxProcesses)
    throw DataError("noise scenario exceeds " +
                    std::to_string(NoiseScenario::kMaxProcesses) + " processes");
  return s;
}

const char* to_string(TraceSource s) {
  switch (s) {
    case TraceSource::synthetic: return "synthetic";
    case TraceSource::live: return "live";
    case TraceSource::replay: return "replay";
  }
  return "synthetic";
}

TraceSource source_from_string(const std::string& s) {
  if (s == "synthetic") return TraceSource::synthetic;
  if (s == "live") return TraceSource::live;
  if (s == "replay") return TraceSource::replay;
  throw DataError("unknown trace source: " + s);
}

std::vector<std::string> validate_trace(const Trace& t) {
  std::vector<std::string> v;
  if (!(t.sample_rate_hz > 0)) v.push_back("sample_rate_hz must be positive");
  if (!(t.duration_s > 0)) v.push_back("duration_s must be positive");
  if (!t.has_power && !t.has_temp) v.push_back("trace has no channels");

  const Eigen::Index n_power = t.power_w.size();
  const Eigen::Index n_temp = t.temp_c.size();
  if (t.has_power && t.has_temp && n_power != n_temp)
    v.push_back("power and temperature lengths differ");

  const Eigen::Index n = t.has_power ? n_power : n_temp;
  if (n < 1) v.push_back("trace must hold at least one sample");
  if (t.sample_rate_hz > 0 && t.duration_s > 0 &&
      n != expected_samples(t.sample_rate_hz, t.duration_s))
    v.push_back("sample count does not equal round(rate*duration)");

  if (t.has_power) {
    for (Eigen::Index i = 0; i < n_power; ++i) {
      if (!(t.power_w[i] >= 0.0)) {
        v.push_back("power sample " + std::to_string(i) + " is negative or NaN");
        break;
      }
    }
  }
  if (t.has_temp) {
    for (Eigen::Index i = 0; i < n_temp; ++i) {
      if (!(t.temp_c[i] >= -50.0 && t.temp_c[i] <= 150.0)) {
        v.push_back("temperature sample " + std::to_string(i) +
                    " outside [-50, 150] or NaN");
        break;
      }
    }
  }

  if (t.meta.source == TraceSource::synthetic && !t.meta.seed.has_value())
    v.push_back("synthetic trace must record its seed");
  return v;
}

}  // namespace energon
