#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>

#include "energon/config_file.hpp"
#include "energon/dataset.hpp"
#include "energon/registry.hpp"
#include "energon/taxonomy.hpp"
#include "energon/trace.hpp"

namespace energon {

// ---- power model ---------------------------------------------------------
//
// Per-inference signal (all powers in watts):
//   encoder phase : plateau P_enc = p_idle + alpha_enc * u(cfg)
//   decoder phase : tokens_per_inference equal-duration steps whose heights
//                   run linearly from P_enc (first step) to
//                   P_dec = min(p_cap, p_idle + alpha_dec * u(cfg));
//                   the first step extends the encoder plateau, so one
//                   inference shows exactly tokens_per_inference plateaus.
//   vision rows   : a single P_enc plateau, no staircase.
//
// Scale unit u(cfg) = (layers/6) * (heads/8) * (dim/512), normalized to the
// 6-layer 8-head 512-dim reference.
//
// Phase tempo d(cfg) = (layers/6) * sqrt(heads/8): encoder phase and each
// decoder step last enc_seconds * d(cfg). After each inference the host
// pauses at idle for inter_inference_gap_s * cadence(family) * (layers/6)
// before launching the next; the cadence factor is a fixed per-family
// constant (0 for T5/Custom/GoogleViT). Both timing terms exist because the
// feature pipeline z-normalizes per trace: amplitude alone cannot separate
// equal-u architectures, timing can.
struct PowerModelParams {
  double p_idle_w = 2.0;
  double alpha_enc_w = 24.0;   // anchor: 1-layer/8-head/512-dim plateau = 6 W
  double alpha_dec_w = 108.0;  // anchor: same config, final step = 20 W
  double p_cap_w = 300.0;      // "A40"-like cap; 80 for "GTX 1660 Ti"-like
  int tokens_per_inference = 12;
  double enc_seconds = 0.6;    // encoder phase of the 6/8/512 reference
  double jitter_sd_w = 0.15;
  double inter_inference_gap_s = 0.5;

  // Gains scaled down (~= /33) so every registry row stays under the default
  // cap even with one matmul background; used for registry-wide datasets.
  static PowerModelParams registry_scale();

  void validate() const;  // p_idle < p_cap, gains >= 0, tokens >= 1, ...
};

double scale_unit(const ModelConfig& cfg);   // u(cfg)
double phase_tempo(const ModelConfig& cfg);  // d(cfg)
double family_cadence(Family f);

// Derived per-inference timing (seconds).
struct InferenceTiming {
  double encoder_s = 0;
  double step_s = 0;       // one decoder step
  double inference_s = 0;  // encoder_s + tokens * step_s (vision: encoder_s)
  double gap_s = 0;        // idle pause after each inference
  double period_s = 0;     // inference_s + gap_s
};
InferenceTiming inference_timing(const ModelConfig& cfg,
                                 const PowerModelParams& p);

// Noiseless workload power at time t (seconds since workload start) when
// n_inferences repeat back-to-back (cadence gaps included); idle afterwards.
double workload_power_at(const ModelConfig& cfg, const PowerModelParams& p,
                         std::int64_t n_inferences, double t);

// Sampled workload power, Gaussian jitter added, clamped to [0, p_cap].
// DataError when duration_s cannot hold one full inference.
Eigen::ArrayXd workload_power(const ModelConfig& cfg, const PowerModelParams& p,
                              std::int64_t n_inferences, double sample_rate_hz,
                              double duration_s, std::uint64_t seed);

// ---- thermal model ---------------------------------------------------------
//
// First-order lumped RC node, forward Euler with h = 1/rate:
//   dT/dt = (t_ambient - T)/tau + kappa * P(t)
// Steady-state rise for constant P is kappa * tau * P.
struct ThermalModelParams {
  double tau_s = 45.0;
  double kappa_c_per_w_s = 22.0 / (45.0 * 30.0);  // 30 W sustained -> +22 C
  double t_ambient_c = 28.0;

  // Milder coupling (300 W -> +50 C) keeping registry-scale datasets inside
  // the trace temperature sanity bounds under background load.
  static ThermalModelParams registry_scale();

  void validate() const;
};

// temp[i] = temperature after i Euler steps from t0 (temp[0] == t0).
// DataError when 1/rate >= tau (unstable step).
Eigen::ArrayXd thermal_from_power(const Eigen::ArrayXd& power_w,
                                  const ThermalModelParams& p,
                                  double sample_rate_hz, double t0_c);

// ---- background processes ---------------------------------------------------
//
//   matmul        : constant 0.6 * p_cap
//   cnn_classify  : square wave, period 4 s, duty 0.5, high 0.4 * p_cap,
//                   high first at t = 0
//   vit_inference : the registry "deit-base" workload
// Jitter is added per sample exactly as for workloads (clamp happens once,
// in synthesize_trace).
Eigen::ArrayXd background_power(BackgroundKind kind, const PowerModelParams& p,
                                double sample_rate_hz, double duration_s,
                                std::uint64_t seed);

// ---- synthesis ---------------------------------------------------------------

// total = clamp(workload + sum(background), 0, p_cap); temperature follows the
// total. Background j uses child seed splitmix64(seed + j + 1) so one seed
// pins the whole trace byte-exactly.
Trace synthesize_trace(const ModelConfig& cfg, const NoiseScenario& scenario,
                       const PowerModelParams& pp, const ThermalModelParams& tp,
                       double sample_rate_hz, double duration_s,
                       std::uint64_t seed);

// per_class traces per taxonomy leaf; trace i of class c uses seed
// base_seed + c*per_class + i.
TraceDataset build_synthetic_dataset(const LabelTaxonomy& taxonomy,
                                     int per_class,
                                     const NoiseScenario& scenario,
                                     const PowerModelParams& pp,
                                     const ThermalModelParams& tp,
                                     double sample_rate_hz, double duration_s,
                                     std::uint64_t base_seed);

// ---- config-file binding ([power], [thermal], [scenario]) -------------------

PowerModelParams power_params_from_config(const ConfigFile& cfg,
                                          const PowerModelParams& defaults);
ThermalModelParams thermal_params_from_config(const ConfigFile& cfg,
                                              const ThermalModelParams& defaults);
NoiseScenario scenario_from_config(const ConfigFile& cfg);

}  // namespace energon
