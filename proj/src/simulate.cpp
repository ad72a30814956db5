#include "energon/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "energon/errors.hpp"
#include "energon/rng.hpp"

namespace energon {

PowerModelParams PowerModelParams::registry_scale() {
  PowerModelParams p;
  // Gains divided by 100/3: the largest registry row (u = 32) peaks at
  // 2 + 3.24*32 = 105.68 W, leaving headroom for a 180 W matmul background
  // under the 300 W cap.
  p.alpha_enc_w = 24.0 * 0.03;
  p.alpha_dec_w = 108.0 * 0.03;
  return p;
}

void PowerModelParams::validate() const {
  if (!(p_idle_w >= 0)) throw DataError("p_idle_w must be >= 0");
  if (!(p_idle_w < p_cap_w)) throw DataError("p_idle_w must stay below p_cap_w");
  if (!(alpha_enc_w >= 0) || !(alpha_dec_w >= 0))
    throw DataError("power gains must be >= 0");
  if (tokens_per_inference < 1) throw DataError("tokens_per_inference must be >= 1");
  if (!(enc_seconds > 0)) throw DataError("enc_seconds must be positive");
  if (!(jitter_sd_w >= 0)) throw DataError("jitter_sd_w must be >= 0");
  if (!(inter_inference_gap_s >= 0))
    throw DataError("inter_inference_gap_s must be >= 0");
}

ThermalModelParams ThermalModelParams::registry_scale() {
  ThermalModelParams p;
  p.kappa_c_per_w_s = 50.0 / (300.0 * 45.0);  // 300 W sustained -> +50 C
  return p;
}

void ThermalModelParams::validate() const {
  if (!(tau_s > 0)) throw DataError("tau_s must be positive");
  if (!(kappa_c_per_w_s >= 0)) throw DataError("kappa must be >= 0");
}

double scale_unit(const ModelConfig& cfg) {
  return (cfg.encoders / 6.0) * (cfg.attention_heads / 8.0) *
         (cfg.embedding_dim / 512.0);
}

double phase_tempo(const ModelConfig& cfg) {
  return (cfg.encoders / 6.0) * std::sqrt(cfg.attention_heads / 8.0);
}

double family_cadence(Family f) {
  switch (f) {
    case Family::T5: return 0.0;
    case Family::MarianMT: return 1.0;
    case Family::META: return 0.5;
    case Family::GoogleLang: return 1.5;
    case Family::Custom: return 0.0;
    case Family::GoogleViT: return 0.0;
    case Family::AppleViT: return 1.0;
    case Family::MetaViT: return 0.5;
    case Family::MicrosoftViT: return 1.5;
  }
  return 0.0;
}

InferenceTiming inference_timing(const ModelConfig& cfg, const PowerModelParams& p) {
  InferenceTiming t;
  const double d = phase_tempo(cfg);
  t.encoder_s = p.enc_seconds * d;
  t.step_s = p.enc_seconds * d;
  t.inference_s = cfg.modality == Modality::vision
                      ? t.encoder_s
                      : t.encoder_s + p.tokens_per_inference * t.step_s;
  t.gap_s = p.inter_inference_gap_s * family_cadence(cfg.family) * (cfg.encoders / 6.0);
  t.period_s = t.inference_s + t.gap_s;
  return t;
}

namespace {

double p_enc(const ModelConfig& cfg, const PowerModelParams& p) {
  return p.p_idle_w + p.alpha_enc_w * scale_unit(cfg);
}

double p_dec(const ModelConfig& cfg, const PowerModelParams& p) {
  return std::min(p.p_cap_w, p.p_idle_w + p.alpha_dec_w * scale_unit(cfg));
}

}  // namespace

double workload_power_at(const ModelConfig& cfg, const PowerModelParams& p,
                         std::int64_t n_inferences, double t) {
  const InferenceTiming tm = inference_timing(cfg, p);
  if (t < 0) return p.p_idle_w;
  const double j = std::floor(t / tm.period_s);
  if (j >= static_cast<double>(n_inferences)) return p.p_idle_w;
  const double s = t - j * tm.period_s;
  if (s >= tm.inference_s) return p.p_idle_w;  // cadence gap
  if (cfg.modality == Modality::vision || s < tm.encoder_s) return p_enc(cfg, p);

  const int tokens = p.tokens_per_inference;
  int k = static_cast<int>(std::floor((s - tm.encoder_s) / tm.step_s));
  k = std::clamp(k, 0, tokens - 1);
  if (tokens == 1) return p_dec(cfg, p);
  // Step heights run linearly from the encoder plateau (step 0) to the
  // decoder peak (last step), so the staircase shows exactly `tokens`
  // distinct plateaus per inference.
  return p_enc(cfg, p) +
         (p_dec(cfg, p) - p_enc(cfg, p)) * (static_cast<double>(k) / (tokens - 1));
}

Eigen::ArrayXd workload_power(const ModelConfig& cfg, const PowerModelParams& p,
                              std::int64_t n_inferences, double sample_rate_hz,
                              double duration_s, std::uint64_t seed) {
  p.validate();
  if (n_inferences < 1) throw DataError("n_inferences must be >= 1");
  if (!(sample_rate_hz > 0)) throw DataError("sample rate must be positive");
  const InferenceTiming tm = inference_timing(cfg, p);
  if (duration_s < tm.inference_s)
    throw DataError("duration " + std::to_string(duration_s) +
                    " s is shorter than one inference (" +
                    std::to_string(tm.inference_s) + " s) for " + cfg.name);

  const Eigen::Index n = expected_samples(sample_rate_hz, duration_s);
  Eigen::ArrayXd out(n);
  Rng rng(seed);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate_hz;
    double v = workload_power_at(cfg, p, n_inferences, t) +
               p.jitter_sd_w * rng.normal();
    out[i] = std::clamp(v, 0.0, p.p_cap_w);
  }
  return out;
}

Eigen::ArrayXd thermal_from_power(const Eigen::ArrayXd& power_w,
                                  const ThermalModelParams& p,
                                  double sample_rate_hz, double t0_c) {
  p.validate();
  if (!(sample_rate_hz > 0)) throw DataError("sample rate must be positive");
  const double h = 1.0 / sample_rate_hz;
  if (h >= p.tau_s)
    throw DataError("Euler step " + std::to_string(h) +
                    " s is not stable for tau " + std::to_string(p.tau_s) + " s");

  Eigen::ArrayXd temp(power_w.size());
  if (power_w.size() == 0) return temp;
  temp[0] = t0_c;
  for (Eigen::Index i = 1; i < power_w.size(); ++i)
    temp[i] = temp[i - 1] + h * ((p.t_ambient_c - temp[i - 1]) / p.tau_s +
                                 p.kappa_c_per_w_s * power_w[i - 1]);
  return temp;
}

Eigen::ArrayXd background_power(BackgroundKind kind, const PowerModelParams& p,
                                double sample_rate_hz, double duration_s,
                                std::uint64_t seed) {
  const Eigen::Index n = expected_samples(sample_rate_hz, duration_s);
  Eigen::ArrayXd out(n);
  Rng rng(seed);
  switch (kind) {
    case BackgroundKind::matmul: {
      const double level = 0.6 * p.p_cap_w;
      for (Eigen::Index i = 0; i < n; ++i)
        out[i] = level + p.jitter_sd_w * rng.normal();
      return out;
    }
    case BackgroundKind::cnn_classify: {
      const double high = 0.4 * p.p_cap_w;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / sample_rate_hz;
        const double level = std::fmod(t, 4.0) < 2.0 ? high : 0.0;
        out[i] = level + p.jitter_sd_w * rng.normal();
      }
      return out;
    }
    case BackgroundKind::vit_inference: {
      const ModelConfig& cfg = registry_lookup("deit-base");
      const InferenceTiming tm = inference_timing(cfg, p);
      const auto n_fill =
          static_cast<std::int64_t>(std::ceil(duration_s / tm.period_s)) + 1;
      return workload_power(cfg, p, n_fill, sample_rate_hz, duration_s, seed);
    }
  }
  throw DataError("unknown background kind");
}

Trace synthesize_trace(const ModelConfig& cfg, const NoiseScenario& scenario,
                       const PowerModelParams& pp, const ThermalModelParams& tp,
                       double sample_rate_hz, double duration_s,
                       std::uint64_t seed) {
  if (scenario.count() > NoiseScenario::kMaxProcesses)
    throw DataError("noise scenario exceeds the process limit");

  const InferenceTiming tm = inference_timing(cfg, pp);
  const auto n_fill =
      static_cast<std::int64_t>(std::ceil(duration_s / tm.period_s)) + 1;
  Eigen::ArrayXd total =
      workload_power(cfg, pp, n_fill, sample_rate_hz, duration_s, seed);
  for (int j = 0; j < scenario.count(); ++j)
    total += background_power(scenario.background[static_cast<std::size_t>(j)], pp,
                              sample_rate_hz, duration_s,
                              splitmix64(seed + static_cast<std::uint64_t>(j) + 1));
  total = total.cwiseMax(0.0).cwiseMin(pp.p_cap_w);

  Trace t;
  t.sample_rate_hz = sample_rate_hz;
  t.duration_s = duration_s;
  t.power_w = total;
  t.meta.source = TraceSource::synthetic;
  t.meta.gpu_name = "synthetic-v1";
  t.meta.base_temp_c = 28.0;
  t.meta.label = cfg.label();
  t.meta.scenario = scenario;
  t.meta.seed = seed;
  t.temp_c = thermal_from_power(total, tp, sample_rate_hz, t.meta.base_temp_c);
  return t;
}

TraceDataset build_synthetic_dataset(const LabelTaxonomy& taxonomy, int per_class,
                                     const NoiseScenario& scenario,
                                     const PowerModelParams& pp,
                                     const ThermalModelParams& tp,
                                     double sample_rate_hz, double duration_s,
                                     std::uint64_t base_seed) {
  // Two traces per class is the floor every split protocol needs.
  if (per_class < 2) throw DataError("per_class must be >= 2");
  TraceDataset ds;
  ds.split_seed = base_seed;
  ds.traces.reserve(taxonomy.leaves.size() * static_cast<std::size_t>(per_class));
  for (std::size_t c = 0; c < taxonomy.leaves.size(); ++c) {
    const ModelConfig& cfg = registry_lookup(taxonomy.leaves[c].model_name);
    for (int i = 0; i < per_class; ++i) {
      const std::uint64_t seed =
          base_seed + static_cast<std::uint64_t>(c) * static_cast<std::uint64_t>(per_class) +
          static_cast<std::uint64_t>(i);
      ds.traces.push_back(
          synthesize_trace(cfg, scenario, pp, tp, sample_rate_hz, duration_s, seed));
    }
  }
  return ds;
}

PowerModelParams power_params_from_config(const ConfigFile& cfg,
                                          const PowerModelParams& defaults) {
  PowerModelParams p = defaults;
  p.p_idle_w = cfg.get_double("power", "p_idle_w", p.p_idle_w);
  p.alpha_enc_w = cfg.get_double("power", "alpha_enc_w", p.alpha_enc_w);
  p.alpha_dec_w = cfg.get_double("power", "alpha_dec_w", p.alpha_dec_w);
  p.p_cap_w = cfg.get_double("power", "p_cap_w", p.p_cap_w);
  p.tokens_per_inference =
      cfg.get_int("power", "tokens_per_inference", p.tokens_per_inference);
  p.enc_seconds = cfg.get_double("power", "enc_seconds", p.enc_seconds);
  p.jitter_sd_w = cfg.get_double("power", "jitter_sd_w", p.jitter_sd_w);
  p.inter_inference_gap_s =
      cfg.get_double("power", "inter_inference_gap_s", p.inter_inference_gap_s);
  p.validate();
  return p;
}

ThermalModelParams thermal_params_from_config(const ConfigFile& cfg,
                                              const ThermalModelParams& defaults) {
  ThermalModelParams p = defaults;
  p.tau_s = cfg.get_double("thermal", "tau_s", p.tau_s);
  p.kappa_c_per_w_s = cfg.get_double("thermal", "kappa_c_per_w_s", p.kappa_c_per_w_s);
  p.t_ambient_c = cfg.get_double("thermal", "t_ambient_c", p.t_ambient_c);
  p.validate();
  return p;
}

NoiseScenario scenario_from_config(const ConfigFile& cfg) {
  return NoiseScenario::parse(cfg.get_string("scenario", "background", ""));
}

}  // namespace energon
