#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "energon/simulate.hpp"
#include "energon/trace.hpp"

namespace energon {

struct TelemetryReading {
  double power_w = 0.0;
  double temp_c = 0.0;
};

// Sensor abstraction. paced() backends deliver readings on their own clock
// (the sampler waits for ticks); unpaced backends answer immediately, so
// replay-driven tests run without wall-clock sleeps.
class TelemetryBackend {
 public:
  virtual ~TelemetryBackend() = default;
  virtual bool has_power() const = 0;
  virtual bool has_temp() const = 0;
  virtual std::string gpu_name() const = 0;
  virtual bool paced() const { return false; }
  // One fresh reading; BackendError on sensor failure / stream end.
  virtual TelemetryReading sample() = 0;
};

// Serves a fixed reading sequence (tests, cooldown scripts).
class ScriptedBackend : public TelemetryBackend {
 public:
  ScriptedBackend(std::vector<TelemetryReading> readings, std::string name = "scripted",
                  bool power = true, bool temp = true);
  bool has_power() const override { return has_power_; }
  bool has_temp() const override { return has_temp_; }
  std::string gpu_name() const override { return name_; }
  TelemetryReading sample() override;

 private:
  std::vector<TelemetryReading> readings_;
  std::size_t next_ = 0;
  std::string name_;
  bool has_power_, has_temp_;
};

// Replays a stored trace file sample by sample.
class ReplayBackend : public TelemetryBackend {
 public:
  explicit ReplayBackend(const std::string& trace_path);
  explicit ReplayBackend(Trace trace);
  bool has_power() const override;
  bool has_temp() const override;
  std::string gpu_name() const override;
  TelemetryReading sample() override;
  const Trace& trace() const { return trace_; }

 private:
  Trace trace_;
  Eigen::Index next_ = 0;
};

// Emits a synthetic workload on the fly (per-trace seed advances).
class SyntheticBackend : public TelemetryBackend {
 public:
  SyntheticBackend(ModelConfig cfg, NoiseScenario scenario, PowerModelParams pp,
                   ThermalModelParams tp, double rate_hz, double duration_s,
                   std::uint64_t seed);
  bool has_power() const override { return true; }
  bool has_temp() const override { return true; }
  std::string gpu_name() const override { return "synthetic-v1"; }
  TelemetryReading sample() override;
  // record_session calls this between traces; regenerates with the next seed.
  void next_trace();
  std::uint64_t current_seed() const { return seed_; }
  const ModelConfig& config() const { return cfg_; }
  const NoiseScenario& scenario() const { return scenario_; }

 private:
  void regenerate();
  ModelConfig cfg_;
  NoiseScenario scenario_;
  PowerModelParams pp_;
  ThermalModelParams tp_;
  double rate_hz_, duration_s_;
  std::uint64_t seed_;
  Trace trace_;
  Eigen::Index next_ = 0;
};

// Live NVML-CLI backend. Spawns
//   nvidia-smi --query-gpu=power.draw,temperature.gpu
//              --format=csv,noheader,nounits -lms <period_ms>
// (plus "-i <index>" when ENERGON_GPU_INDEX is set) and parses each line.
class LiveBackend : public TelemetryBackend {
 public:
  explicit LiveBackend(int period_ms);
  ~LiveBackend() override;
  bool has_power() const override { return true; }
  bool has_temp() const override { return true; }
  std::string gpu_name() const override { return gpu_name_; }
  bool paced() const override { return true; }
  TelemetryReading sample() override;

  static std::string command_line(int period_ms);

 private:
  void* pipe_ = nullptr;  // FILE*
  std::string gpu_name_ = "live-gpu";
};

// "65.21 W, 28" or "65.21, 28" -> (65.21, 28.0). DataError names the
// zero-based column that failed ("N/A, 28" -> column 0).
TelemetryReading parse_vendor_csv(const std::string& line);

// ---- collection plan ---------------------------------------------------------

struct CollectionPlan {
  double sample_rate_hz = 7.0;  // within [1, 100]
  double duration_s = 120.0;
  double base_temp_c = 28.0;
  double cooldown_epsilon_c = 1.0;
  double cooldown_timeout_s = 600.0;
  int traces_requested = 1;
  std::optional<Label> label;  // attached to recorded traces when known

  void validate() const;
};

// Exactly round(rate*duration) samples on the nominal tick grid; a late tick
// is sampled immediately (never skipped) and the worst lateness lands in
// meta.max_tick_jitter_s. Runs the tick loop on a dedicated thread feeding a
// single-producer buffer; the buffer is read after the thread completes.
// BackendError from the backend aborts the trace (no partial trace escapes).
Trace sample_stream(TelemetryBackend& backend, const CollectionPlan& plan);

// Polls at 1 Hz until temperature <= base + epsilon; BackendError carrying
// the last observed temperature on timeout.
void await_cooldown(TelemetryBackend& backend, const CollectionPlan& plan);

// Per trace: cooldown gate -> sample_stream -> write file -> append manifest
// row (atomic per trace). Trace files are trace_<index>.trace; existing
// indices are skipped, which makes interrupted sessions resumable.
std::vector<std::string> record_session(TelemetryBackend& backend,
                                        const CollectionPlan& plan,
                                        const std::string& out_dir);

}  // namespace energon
