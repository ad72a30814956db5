// Command-line front end: simulate / collect / train / eval / predict /
// steps / robustness. Exit codes: 0 success, 1 usage, 2 data error,
// 3 backend error.
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "energon/checkpoint.hpp"
#include "energon/config_file.hpp"
#include "energon/errors.hpp"
#include "energon/features.hpp"
#include "energon/hierarchy.hpp"
#include "energon/registry.hpp"
#include "energon/report.hpp"
#include "energon/robustness.hpp"
#include "energon/simulate.hpp"
#include "energon/steps.hpp"
#include "energon/taxonomy.hpp"
#include "energon/telemetry.hpp"
#include "energon/trace_io.hpp"
#include "energon/training.hpp"

namespace {

using namespace energon;

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::vector<std::string> split_csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != ' ' && c != '\t') {
      cur.push_back(c);
    }
  }
  if (!cur.empty() || !out.empty()) out.push_back(cur);
  return out;
}

// "<taxonomy>/<stage>", e.g. "language/family".
std::pair<const LabelTaxonomy*, const TaxonomyStage*> resolve_stage(
    const std::string& qualified) {
  const std::size_t slash = qualified.find('/');
  if (slash == std::string::npos) {
    std::string msg = "stage must be <taxonomy>/<stage>; available:";
    for (const auto& tname : builtin_taxonomy_names())
      for (const auto& st : builtin_taxonomy(tname).stages)
        msg += " " + tname + "/" + st.name;
    throw UsageError(msg);
  }
  const LabelTaxonomy& tax = builtin_taxonomy(qualified.substr(0, slash));
  const TaxonomyStage& stage = tax.stage_by_name(qualified.substr(slash + 1));
  return {&tax, &stage};
}

std::vector<Label> stage_scope(const LabelTaxonomy& tax, const TaxonomyStage& stage) {
  return stage.parent_class.empty() ? tax.leaves
                                    : tax.leaves_in_root_class(stage.parent_class);
}

// Pulls the stage's traces out of a labeled dataset as CNN inputs.
void stage_features(const TraceDataset& ds, const LabelTaxonomy& tax,
                    const TaxonomyStage& stage, int input_length, Batch& x,
                    std::vector<int>& y) {
  const std::vector<Label> scope = stage_scope(tax, stage);
  std::vector<Trace> selected;
  for (const Trace& t : ds.traces) {
    if (!t.meta.label) continue;
    for (const Label& leaf : scope) {
      if (*t.meta.label == leaf) {
        selected.push_back(t);
        break;
      }
    }
  }
  if (selected.empty())
    throw DataError("no traces in the dataset match stage '" + stage.name + "'");
  std::vector<FeatureTensor> features = batch_features(selected, input_length);
  x.clear();
  y.clear();
  for (auto& f : features) {
    x.push_back(std::move(f.values));
    y.push_back(tax.class_index(stage, *f.label));
  }
}

PowerModelParams power_profile(const std::string& name) {
  if (name == "registry") return PowerModelParams::registry_scale();
  if (name == "anchor") return PowerModelParams{};
  throw UsageError("unknown power profile '" + name + "' (registry, anchor)");
}

ThermalModelParams thermal_profile(const std::string& name) {
  if (name == "registry") return ThermalModelParams::registry_scale();
  if (name == "anchor") return ThermalModelParams{};
  throw UsageError("unknown power profile '" + name + "' (registry, anchor)");
}

// ---- simulate ----------------------------------------------------------------

struct SimulateOpts {
  std::string config, taxonomy, out, scenario;
  int per_class = 10;
  std::uint64_t seed = 0;
};

void run_simulate(const SimulateOpts& o) {
  const ConfigFile cfg = ConfigFile::load(o.config);
  const std::string profile = cfg.get_string("power", "profile", "registry");
  const PowerModelParams pp = power_params_from_config(cfg, power_profile(profile));
  const ThermalModelParams tp =
      thermal_params_from_config(cfg, thermal_profile(profile));
  const double rate = cfg.get_double("trace", "sample_rate_hz", 7.0);
  const double duration = cfg.get_double("trace", "duration_s", 120.0);
  const NoiseScenario scenario = o.scenario.empty() ? scenario_from_config(cfg)
                                                    : NoiseScenario::parse(o.scenario);

  const LabelTaxonomy& tax = builtin_taxonomy(o.taxonomy);
  TraceDataset ds = build_synthetic_dataset(tax, o.per_class, scenario, pp, tp, rate,
                                            duration, o.seed);
  write_dataset(o.out, ds);
  std::cout << "wrote " << ds.traces.size() << " traces (" << tax.leaves.size()
            << " classes x " << o.per_class << ") to " << o.out << "\n";
  std::cout << "scenario: " << scenario.to_string() << ", profile: " << profile
            << ", seed: " << o.seed << "\n";
}

// ---- collect -----------------------------------------------------------------

struct CollectOpts {
  std::string plan, out;
  std::int64_t seed = -1;  // overrides the plan seed when >= 0
};

void run_collect(const CollectOpts& o) {
  const ConfigFile cfg = ConfigFile::load(o.plan);
  CollectionPlan plan;
  plan.sample_rate_hz = cfg.get_double("collect", "sample_rate_hz", plan.sample_rate_hz);
  plan.duration_s = cfg.get_double("collect", "duration_s", plan.duration_s);
  plan.base_temp_c = cfg.get_double("collect", "base_temp_c", plan.base_temp_c);
  plan.cooldown_epsilon_c =
      cfg.get_double("collect", "cooldown_epsilon_c", plan.cooldown_epsilon_c);
  plan.cooldown_timeout_s =
      cfg.get_double("collect", "cooldown_timeout_s", plan.cooldown_timeout_s);
  plan.traces_requested = cfg.get_int("collect", "traces", plan.traces_requested);
  const std::string label = cfg.get_string("collect", "label", "");
  if (!label.empty()) plan.label = registry_lookup(label).label();

  const std::string kind = cfg.get_string("collect", "backend", "");
  std::unique_ptr<TelemetryBackend> backend;
  if (kind == "synthetic") {
    const std::string model = cfg.get_string("collect", "model", "");
    if (model.empty()) throw UsageError("synthetic backend needs collect.model");
    const std::string profile = cfg.get_string("power", "profile", "registry");
    const PowerModelParams pp = power_params_from_config(cfg, power_profile(profile));
    const ThermalModelParams tp =
        thermal_params_from_config(cfg, thermal_profile(profile));
    std::uint64_t seed =
        static_cast<std::uint64_t>(cfg.get_int("collect", "seed", 0));
    if (o.seed >= 0) seed = static_cast<std::uint64_t>(o.seed);
    backend = std::make_unique<SyntheticBackend>(
        registry_lookup(model), scenario_from_config(cfg), pp, tp,
        plan.sample_rate_hz, plan.duration_s, seed);
  } else if (kind == "replay") {
    const std::string trace = cfg.get_string("collect", "trace", "");
    if (trace.empty()) throw UsageError("replay backend needs collect.trace");
    backend = std::make_unique<ReplayBackend>(trace);
  } else if (kind == "live") {
    const int period_ms = cfg.get_int(
        "collect", "period_ms",
        static_cast<int>(std::lround(1000.0 / plan.sample_rate_hz)));
    backend = std::make_unique<LiveBackend>(period_ms);
  } else {
    throw UsageError("collect.backend must be synthetic, replay, or live (got '" +
                     kind + "')");
  }

  const std::vector<std::string> written = record_session(*backend, plan, o.out);
  std::cout << "recorded " << written.size() << " trace(s), skipped "
            << (plan.traces_requested - static_cast<int>(written.size()))
            << " existing, in " << o.out << "\n";
}

// ---- train -------------------------------------------------------------------

struct TrainOpts {
  std::string data, stage, spec, out;
  int folds = 5;
  std::uint64_t seed = 0;
};

CnnSpec cnn_spec_from_config(const ConfigFile& cfg) {
  CnnSpec spec;
  const std::string filters = cfg.get_string("cnn", "conv_filters", "");
  if (!filters.empty()) {
    spec.conv_filters.clear();
    for (const auto& tok : split_csv_list(filters))
      spec.conv_filters.push_back(std::stoi(tok));
  }
  const std::string pools = cfg.get_string("cnn", "pool_after", "");
  if (!pools.empty()) {
    spec.pool_after.clear();
    for (const auto& tok : split_csv_list(pools))
      spec.pool_after.push_back(tok == "1" || tok == "true");
  }
  spec.kernel_size = cfg.get_int("cnn", "kernel_size", spec.kernel_size);
  spec.fc_hidden = cfg.get_int("cnn", "fc_hidden", spec.fc_hidden);
  spec.input_length = cfg.get_int("cnn", "input_length", spec.input_length);
  return spec;
}

TrainConfig train_config_from_config(const ConfigFile& cfg) {
  TrainConfig t;
  t.adam.lr = cfg.get_double("train", "lr", t.adam.lr);
  t.epochs = cfg.get_int("train", "epochs", t.epochs);
  t.batch_size = cfg.get_int("train", "batch_size", t.batch_size);
  t.k_folds = cfg.get_int("train", "folds", t.k_folds);
  t.early_stop_loss = cfg.get_double("train", "early_stop_loss", t.early_stop_loss);
  return t;
}

void run_train(const TrainOpts& o) {
  const auto [tax, stage] = resolve_stage(o.stage);
  const ConfigFile cfg = ConfigFile::load(o.spec);
  CnnSpec spec = cnn_spec_from_config(cfg);
  spec.n_classes = static_cast<int>(stage->classes.size());
  TrainConfig train_cfg = train_config_from_config(cfg);
  train_cfg.k_folds = o.folds;
  train_cfg.seed = o.seed;

  const TraceDataset ds = read_dataset(o.data);
  Batch x;
  std::vector<int> y;
  stage_features(ds, *tax, *stage, spec.input_length, x, y);
  std::cout << "training stage " << o.stage << " on " << x.size() << " traces, "
            << stage->classes.size() << " classes\n";

  const EvalReport report = cross_validate(spec, x, y, stage->classes, train_cfg,
                                           o.stage);
  for (std::size_t f = 0; f < report.fold_accuracy.size(); ++f)
    std::cout << "fold " << f << " accuracy " << fixed4(report.fold_accuracy[f])
              << "\n";
  std::cout << "max " << fixed4(report.max_accuracy) << ", mean "
            << fixed4(report.mean_accuracy) << "\n";

  const TrainResult final_fit = train(spec, x, y, train_cfg);
  CheckpointInfo info;
  info.stage = stage->name;
  info.taxonomy = tax->name;
  info.classes = stage->classes;
  save_checkpoint(o.out, final_fit.model, info);
  std::cout << "checkpoint written to " << o.out << "\n";
}

// ---- eval --------------------------------------------------------------------

struct EvalOpts {
  std::string data, model, report;
};

void run_eval(const EvalOpts& o) {
  LoadedCheckpoint loaded = load_checkpoint(o.model);
  const LabelTaxonomy& tax = builtin_taxonomy(loaded.info.taxonomy);
  const TaxonomyStage& stage = tax.stage_by_name(loaded.info.stage);

  const TraceDataset ds = read_dataset(o.data);
  Batch x;
  std::vector<int> y;
  stage_features(ds, tax, stage, loaded.model.spec.input_length, x, y);

  const std::vector<int> pred = predict_classes(loaded.model, x);
  EvalReport report;
  report.stage = loaded.info.taxonomy + "/" + loaded.info.stage;
  report.classes = loaded.info.classes;
  const int k = loaded.model.spec.n_classes;
  report.confusion = Eigen::MatrixXi::Zero(k, k);
  int hits = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    report.confusion(y[i], pred[i]) += 1;
    if (pred[i] == y[i]) ++hits;
  }
  report.fold_accuracy.push_back(static_cast<double>(hits) /
                                 static_cast<double>(y.size()));
  report.finalize();

  make_report(o.report, {report}, {});
  std::cout << render_summary({report});
  std::cout << "report written to " << o.report << "\n";
}

// ---- predict -----------------------------------------------------------------

struct PredictOpts {
  std::string trace, predictor;
};

void run_predict(const PredictOpts& o) {
  HierarchicalPredictor predictor = load_predictor(o.predictor);
  const Trace trace = read_trace_file(o.trace);
  const HierarchicalPrediction pred = predict_hierarchical(predictor, trace);
  std::cout << "leaf: " << pred.leaf.model_name << "\n";
  std::cout << "family: " << to_string(pred.leaf.family) << "\n";
  std::cout << "stage0: " << pred.root_class << " confidence "
            << fixed4(pred.root_confidence) << "\n";
  std::cout << "stage1 confidence: " << fixed4(pred.branch_confidence) << "\n";
}

// ---- steps -------------------------------------------------------------------

struct StepsOpts {
  std::string trace;
  int window = 3;
  double min_rise = 0.5;
};

void run_steps(const StepsOpts& o) {
  const Trace trace = read_trace_file(o.trace);
  if (!trace.has_power) throw DataError("trace has no power channel");
  const StepAnalysis a = count_steps(trace.power_w, o.window, o.min_rise);
  std::cout << "count: " << a.count << "\n";
  std::cout << "mean_rise_w: " << fixed4(a.mean_rise_w) << "\n";
  std::cout << "smooth_window: " << a.smooth_window << "\n";
  std::cout << "boundaries:";
  for (int b : a.boundaries) std::cout << " " << b;
  std::cout << "\n";
}

// ---- robustness --------------------------------------------------------------

struct RobustnessOpts {
  std::string taxonomy, report, stage;
  int per_class = 100;
  int folds = 5;
  int epochs = 20;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  bool train_noisy = false;
};

void run_robustness(const RobustnessOpts& o) {
  RobustnessConfig cfg;
  cfg.taxonomy = builtin_taxonomy(o.taxonomy);
  cfg.stage_name = o.stage.empty() ? cfg.taxonomy.root_stage().name : o.stage;
  cfg.per_class = o.per_class;
  cfg.base_seed = o.seed;
  cfg.train.seed = o.seed;
  cfg.train.k_folds = o.folds;
  cfg.train.epochs = o.epochs;
  cfg.train.adam.lr = o.lr;
  cfg.train_noisy = o.train_noisy;

  const RobustnessReport rr = evaluate_robustness(cfg);

  std::vector<EvalReport> reports{rr.clean};
  std::cout << "clean mean accuracy: " << fixed4(rr.clean.mean_accuracy) << "\n";
  std::string drops = "scenario\tmean_accuracy\tdrop_vs_clean\n";
  for (const ScenarioResult& s : rr.scenarios) {
    reports.push_back(s.report);
    drops += s.scenario.to_string() + "\t" + fixed4(s.report.mean_accuracy) + "\t" +
             fixed4(s.drop_vs_clean) + "\n";
    std::cout << s.scenario.to_string() << ": mean "
              << fixed4(s.report.mean_accuracy) << " (drop "
              << fixed4(s.drop_vs_clean) << ")\n";
  }
  make_report(o.report, reports, {});
  std::ofstream dropf(o.report + "/drops.tsv", std::ios::trunc);
  if (!dropf) throw DataError("cannot write " + o.report + "/drops.tsv");
  dropf << drops;
  std::cout << "report written to " << o.report << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Power/thermal side-channel toolkit for transformer workloads"};
  app.require_subcommand(1);

  SimulateOpts sim;
  auto* c_sim = app.add_subcommand("simulate", "Generate a labeled synthetic dataset");
  c_sim->add_option("--config", sim.config, "model parameter file")->required();
  c_sim->add_option("--taxonomy", sim.taxonomy, "language, vision, or custom")
      ->required();
  c_sim->add_option("--per-class", sim.per_class, "traces per class")->required();
  c_sim->add_option("--out", sim.out, "output dataset directory")->required();
  c_sim->add_option("--scenario", sim.scenario,
                    "background processes, e.g. matmul,cnn,vit");
  c_sim->add_option("--seed", sim.seed, "base RNG seed");
  c_sim->callback([&] { run_simulate(sim); });

  CollectOpts col;
  auto* c_col = app.add_subcommand("collect", "Record traces from a telemetry backend");
  c_col->add_option("--plan", col.plan, "collection plan file")->required();
  c_col->add_option("--out", col.out, "output directory")->required();
  c_col->add_option("--seed", col.seed, "override the plan's seed");
  c_col->callback([&] { run_collect(col); });

  TrainOpts tr;
  auto* c_tr = app.add_subcommand("train", "Cross-validate and fit one stage");
  c_tr->add_option("--data", tr.data, "dataset directory")->required();
  c_tr->add_option("--stage", tr.stage, "stage as <taxonomy>/<stage>")->required();
  c_tr->add_option("--spec", tr.spec, "architecture/training parameter file")
      ->required();
  c_tr->add_option("--out", tr.out, "checkpoint path")->required();
  c_tr->add_option("--folds", tr.folds, "cross-validation folds");
  c_tr->add_option("--seed", tr.seed, "RNG seed");
  c_tr->callback([&] { run_train(tr); });

  EvalOpts ev;
  auto* c_ev = app.add_subcommand("eval", "Score a checkpoint on a labeled dataset");
  c_ev->add_option("--data", ev.data, "dataset directory")->required();
  c_ev->add_option("--model", ev.model, "checkpoint path")->required();
  c_ev->add_option("--report", ev.report, "report output directory")->required();
  c_ev->callback([&] { run_eval(ev); });

  PredictOpts pr;
  auto* c_pr = app.add_subcommand("predict", "Hierarchical prediction for one trace");
  c_pr->add_option("--trace", pr.trace, "trace file")->required();
  c_pr->add_option("--predictor", pr.predictor, "predictor directory")->required();
  c_pr->callback([&] { run_predict(pr); });

  StepsOpts st;
  auto* c_st = app.add_subcommand("steps", "Staircase step analysis for one trace");
  c_st->add_option("--trace", st.trace, "trace file")->required();
  c_st->add_option("--window", st.window, "smoothing window (default 3)");
  c_st->add_option("--min-rise", st.min_rise, "minimum step rise in W (default 0.5)");
  c_st->callback([&] { run_steps(st); });

  RobustnessOpts ro;
  auto* c_ro = app.add_subcommand("robustness", "Noise-scenario evaluation ladder");
  c_ro->add_option("--taxonomy", ro.taxonomy, "language, vision, or custom")
      ->required();
  c_ro->add_option("--report", ro.report, "report output directory")->required();
  c_ro->add_option("--stage", ro.stage, "stage name (default: root stage)");
  c_ro->add_option("--per-class", ro.per_class, "traces per class");
  c_ro->add_option("--folds", ro.folds, "cross-validation folds");
  c_ro->add_option("--epochs", ro.epochs, "training epochs");
  c_ro->add_option("--lr", ro.lr, "Adam learning rate");
  c_ro->add_option("--seed", ro.seed, "base RNG seed");
  c_ro->add_flag("--train-noisy", ro.train_noisy,
                 "retrain per scenario and score its noisy held-out folds");
  c_ro->callback([&] { run_robustness(ro); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const BackendError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
