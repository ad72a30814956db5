#include "energon/telemetry.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <thread>

#include "energon/errors.hpp"
#include "energon/trace_io.hpp"

namespace energon {

// ---- scripted ----------------------------------------------------------------

ScriptedBackend::ScriptedBackend(std::vector<TelemetryReading> readings,
                                 std::string name, bool power, bool temp)
    : readings_(std::move(readings)),
      name_(std::move(name)),
      has_power_(power),
      has_temp_(temp) {}

TelemetryReading ScriptedBackend::sample() {
  if (next_ >= readings_.size())
    throw BackendError("scripted backend exhausted after " +
                       std::to_string(readings_.size()) + " readings");
  return readings_[next_++];
}

// ---- replay ------------------------------------------------------------------

ReplayBackend::ReplayBackend(const std::string& trace_path)
    : trace_(read_trace_file(trace_path)) {}

ReplayBackend::ReplayBackend(Trace trace) : trace_(std::move(trace)) {}

bool ReplayBackend::has_power() const { return trace_.has_power; }
bool ReplayBackend::has_temp() const { return trace_.has_temp; }
std::string ReplayBackend::gpu_name() const { return trace_.meta.gpu_name; }

TelemetryReading ReplayBackend::sample() {
  if (next_ >= trace_.samples())
    throw BackendError("replay exhausted after " + std::to_string(trace_.samples()) +
                       " samples");
  TelemetryReading r;
  if (trace_.has_power) r.power_w = trace_.power_w[next_];
  if (trace_.has_temp) r.temp_c = trace_.temp_c[next_];
  ++next_;
  return r;
}

// ---- synthetic ---------------------------------------------------------------

SyntheticBackend::SyntheticBackend(ModelConfig cfg, NoiseScenario scenario,
                                   PowerModelParams pp, ThermalModelParams tp,
                                   double rate_hz, double duration_s,
                                   std::uint64_t seed)
    : cfg_(std::move(cfg)),
      scenario_(std::move(scenario)),
      pp_(pp),
      tp_(tp),
      rate_hz_(rate_hz),
      duration_s_(duration_s),
      seed_(seed) {
  regenerate();
}

void SyntheticBackend::regenerate() {
  trace_ = synthesize_trace(cfg_, scenario_, pp_, tp_, rate_hz_, duration_s_, seed_);
  next_ = 0;
}

void SyntheticBackend::next_trace() {
  ++seed_;
  regenerate();
}

TelemetryReading SyntheticBackend::sample() {
  if (next_ >= trace_.samples())
    throw BackendError("synthetic trace exhausted; next_trace() starts a new one");
  TelemetryReading r{trace_.power_w[next_], trace_.temp_c[next_]};
  ++next_;
  return r;
}

// ---- live --------------------------------------------------------------------

std::string LiveBackend::command_line(int period_ms) {
  std::string cmd =
      "nvidia-smi --query-gpu=power.draw,temperature.gpu "
      "--format=csv,noheader,nounits -lms " +
      std::to_string(period_ms);
  if (const char* index = std::getenv("ENERGON_GPU_INDEX")) {
    cmd += " -i ";
    cmd += index;
  }
  return cmd;
}

LiveBackend::LiveBackend(int period_ms) {
  if (period_ms < 1) throw UsageError("telemetry period must be >= 1 ms");
  pipe_ = ::popen(command_line(period_ms).c_str(), "r");
  if (!pipe_) throw BackendError("cannot launch nvidia-smi");
}

LiveBackend::~LiveBackend() {
  if (pipe_) ::pclose(static_cast<FILE*>(pipe_));
}

TelemetryReading LiveBackend::sample() {
  char buf[512];
  if (!std::fgets(buf, sizeof buf, static_cast<FILE*>(pipe_)))
    throw BackendError("telemetry stream ended (nvidia-smi exited)");
  return parse_vendor_csv(buf);
}

TelemetryReading parse_vendor_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\n' && c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  if (fields.size() < 2)
    throw DataError("telemetry line has " + std::to_string(fields.size()) +
                    " columns, need 2: '" + line + "'");

  auto parse_field = [](std::string tok, int column) {
    // trim blanks, drop a trailing unit suffix such as " W"
    const auto b = tok.find_first_not_of(" \t");
    const auto e = tok.find_last_not_of(" \t");
    tok = b == std::string::npos ? "" : tok.substr(b, e - b + 1);
    if (tok.size() > 1 && (tok.back() == 'W' || tok.back() == 'C')) {
      tok.pop_back();
      while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t')) tok.pop_back();
    }
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != tok.size())
      throw DataError("telemetry column " + std::to_string(column) +
                      " is not numeric: '" + tok + "'");
    return value;
  };
  return {parse_field(fields[0], 0), parse_field(fields[1], 1)};
}

// ---- collection --------------------------------------------------------------

void CollectionPlan::validate() const {
  if (!(sample_rate_hz >= 1.0 && sample_rate_hz <= 100.0))
    throw UsageError("sample rate must lie in [1, 100] Hz");
  if (!(duration_s > 0)) throw UsageError("duration must be positive");
  if (expected_samples(sample_rate_hz, duration_s) < 1)
    throw UsageError("plan yields no samples");
  if (!(cooldown_epsilon_c >= 0)) throw UsageError("cooldown epsilon must be >= 0");
  if (!(cooldown_timeout_s > 0)) throw UsageError("cooldown timeout must be positive");
  if (traces_requested < 1) throw UsageError("at least one trace must be requested");
}

Trace sample_stream(TelemetryBackend& backend, const CollectionPlan& plan) {
  plan.validate();
  if (!backend.has_power() && !backend.has_temp())
    throw DataError("backend exposes neither power nor temperature");

  const Eigen::Index n = expected_samples(plan.sample_rate_hz, plan.duration_s);
  std::vector<TelemetryReading> readings(static_cast<std::size_t>(n));
  double max_late_s = 0.0;
  std::exception_ptr failure;

  std::thread sampler([&] {
    try {
      using clock = std::chrono::steady_clock;
      const bool paced = backend.paced();
      const auto t0 = clock::now();
      for (Eigen::Index i = 0; i < n; ++i) {
        // The backend call blocks until the next reading. A reading arriving
        // after its nominal tick is taken immediately; only its lateness is
        // recorded.
        readings[static_cast<std::size_t>(i)] = backend.sample();
        if (paced) {
          const double elapsed = std::chrono::duration<double>(clock::now() - t0).count();
          const double late = elapsed - static_cast<double>(i) / plan.sample_rate_hz;
          if (late > max_late_s) max_late_s = late;
        }
      }
    } catch (...) {
      failure = std::current_exception();
    }
  });
  sampler.join();
  if (failure) std::rethrow_exception(failure);

  Trace t;
  t.sample_rate_hz = plan.sample_rate_hz;
  t.duration_s = plan.duration_s;
  t.has_power = backend.has_power();
  t.has_temp = backend.has_temp();
  if (t.has_power) t.power_w.resize(n);
  if (t.has_temp) t.temp_c.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (t.has_power) t.power_w[i] = readings[static_cast<std::size_t>(i)].power_w;
    if (t.has_temp) t.temp_c[i] = readings[static_cast<std::size_t>(i)].temp_c;
  }
  t.meta.source = TraceSource::live;
  t.meta.gpu_name = backend.gpu_name();
  t.meta.base_temp_c = plan.base_temp_c;
  t.meta.label = plan.label;
  if (backend.paced()) t.meta.max_tick_jitter_s = max_late_s;
  return t;
}

void await_cooldown(TelemetryBackend& backend, const CollectionPlan& plan) {
  plan.validate();
  if (!backend.has_temp()) return;  // nothing to gate on
  const double threshold = plan.base_temp_c + plan.cooldown_epsilon_c;
  double last = 0.0;
  for (int poll = 0;; ++poll) {
    const double t = static_cast<double>(poll);  // 1 Hz poll clock
    if (t > plan.cooldown_timeout_s) {
      char msg[128];
      std::snprintf(msg, sizeof msg,
                    "cooldown timed out after %.0f s; last temperature %.1f C",
                    plan.cooldown_timeout_s, last);
      throw BackendError(msg);
    }
    last = backend.sample().temp_c;
    if (last <= threshold) return;
    if (backend.paced()) std::this_thread::sleep_for(std::chrono::seconds(1));
  }
}

std::vector<std::string> record_session(TelemetryBackend& backend,
                                        const CollectionPlan& plan,
                                        const std::string& out_dir) {
  plan.validate();
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create output directory: " + out_dir);
  const std::string manifest = (fs::path(out_dir) / "manifest.tsv").string();

  auto* synthetic = dynamic_cast<SyntheticBackend*>(&backend);
  auto* replay = dynamic_cast<ReplayBackend*>(&backend);

  std::vector<std::string> written;
  for (int k = 0; k < plan.traces_requested; ++k) {
    const std::string name = "trace_" + std::to_string(k) + ".trace";
    const std::string path = (fs::path(out_dir) / name).string();
    if (fs::exists(path)) {
      // Interrupted session: this index is already on disk. The generator
      // still advances so re-runs produce the same remaining traces.
      if (synthetic) synthetic->next_trace();
      continue;
    }

    // The cooldown gate guards a physical sensor returning to baseline; the
    // synthetic generator has no thermal state to wait for.
    if (!synthetic) await_cooldown(backend, plan);

    const std::uint64_t seed = synthetic ? synthetic->current_seed() : 0;
    Trace t = sample_stream(backend, plan);
    if (synthetic) {
      t.meta.source = TraceSource::synthetic;
      t.meta.seed = seed;
      t.meta.scenario = synthetic->scenario();
      if (!t.meta.label) t.meta.label = synthetic->config().label();
    } else if (replay) {
      t.meta.source = TraceSource::replay;
      if (!t.meta.label) t.meta.label = replay->trace().meta.label;
    }
    validate_trace(t);
    write_trace_file(path, t);

    ManifestRow row;
    row.path = name;
    row.family = t.meta.label ? to_string(t.meta.label->family) : "-";
    row.model_name = t.meta.label ? t.meta.label->model_name : "-";
    append_manifest_row(manifest, row);
    written.push_back(path);

    if (synthetic) synthetic->next_trace();
  }
  return written;
}

}  // namespace energon
