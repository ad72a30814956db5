#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <set>

#include "energon/config_file.hpp"
#include "energon/dataset.hpp"
#include "energon/errors.hpp"
#include "energon/registry.hpp"
#include "energon/taxonomy.hpp"
#include "energon/trace.hpp"
#include "energon/trace_io.hpp"

using namespace energon;
namespace fs = std::filesystem;

namespace {

Trace make_trace(int n, double rate, const char* model = nullptr) {
  Trace t;
  t.sample_rate_hz = rate;
  t.duration_s = n / rate;
  t.power_w = Eigen::ArrayXd::LinSpaced(n, 2.0, 30.0);
  t.temp_c = Eigen::ArrayXd::Constant(n, 28.0);
  t.meta.seed = 7;
  if (model) t.meta.label = registry_lookup(model).label();
  return t;
}

fs::path temp_dir(const char* tag) {
  fs::path p = fs::temp_directory_path() / (std::string("energon_core_") + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("registry holds the full architecture table") {
  const auto& reg = model_registry();
  REQUIRE(reg.size() == 25u);

  int language = 0, vision = 0, custom = 0;
  for (const auto& m : reg) {
    if (m.modality == Modality::language) ++language;
    if (m.modality == Modality::vision) {
      ++vision;
      CHECK(m.decoders == 0);
    }
    if (m.family == Family::Custom) {
      ++custom;
      CHECK(m.embedding_dim == 512);
    }
  }
  CHECK(language == 17);
  CHECK(vision == 8);
  CHECK(custom == 9);

  const ModelConfig& t5 = registry_lookup("t5-small");
  CHECK(t5.encoders == 6);
  CHECK(t5.decoders == 6);
  CHECK(t5.attention_heads == 8);
  CHECK(t5.embedding_dim == 512);
  CHECK(t5.family == Family::T5);

  const ModelConfig& big = registry_lookup("t5-3b");
  CHECK(big.encoders == 24);
  CHECK(big.attention_heads == 32);
  CHECK(big.embedding_dim == 1024);
}

TEST_CASE("registry lookup accepts aliases and rejects unknowns") {
  CHECK(registry_lookup("deit-base").name == "deit-base-distilled-patch16-224");
  CHECK(registry_lookup("google/vit-large").name == "vit-large-patch16-225");
  CHECK(registry_lookup("opus-mt-en-fr").family == Family::MarianMT);
  CHECK(registry_lookup("12/16").name == "custom-12x16");
  CHECK(registry_lookup("custom-6x8").attention_heads == 8);
  CHECK_THROWS_AS((void)registry_lookup("gpt-17"), DataError);
  try {
    (void)registry_lookup("gpt-17");
  } catch (const DataError& e) {
    // The error lists every registered name.
    CHECK(std::string(e.what()).find("t5-small") != std::string::npos);
  }
}

TEST_CASE("builtin taxonomies validate and partition their leaves") {
  for (const std::string& name : builtin_taxonomy_names()) {
    const LabelTaxonomy& t = builtin_taxonomy(name);
    CHECK(t.validate().empty());
    // Every leaf reaches exactly one root class; multi-leaf classes refine.
    for (const Label& leaf : t.leaves) {
      const std::string cls = t.class_of(t.root_stage(), leaf);
      CHECK(std::count(t.root_stage().classes.begin(), t.root_stage().classes.end(),
                       cls) == 1);
      const TaxonomyStage* refine = t.refinement_for(cls);
      if (t.leaves_in_root_class(cls).size() > 1) {
        REQUIRE(refine != nullptr);
        CHECK(t.class_index(*refine, leaf) >= 0);
      } else {
        CHECK(refine == nullptr);
      }
    }
  }
  CHECK(builtin_taxonomy("language").leaves.size() == 8u);
  CHECK(builtin_taxonomy("vision").leaves.size() == 8u);
  CHECK(builtin_taxonomy("custom").leaves.size() == 9u);
  CHECK_THROWS_AS((void)builtin_taxonomy("audio"), DataError);
}

TEST_CASE("taxonomy stage queries") {
  const LabelTaxonomy& lang = builtin_taxonomy("language");
  const Label t5_base = registry_lookup("t5-base").label();
  CHECK(lang.class_of(lang.root_stage(), t5_base) == "T5");
  CHECK(lang.class_index(lang.root_stage(), t5_base) == 0);
  const TaxonomyStage& heads = lang.stage_by_name("t5-heads");
  CHECK(lang.class_of(heads, t5_base) == "12");
  CHECK(lang.contains(t5_base));
  CHECK(!lang.contains(registry_lookup("deit-base").label()));

  // 4 heads is not a t5-heads class, so the label falls outside the stage.
  const Label vit = registry_lookup("mobilevit-small").label();
  CHECK_THROWS_AS((void)lang.class_index(heads, vit), DataError);
  CHECK_THROWS_AS((void)lang.stage_by_name("nope"), DataError);
}

TEST_CASE("broken taxonomies report violations") {
  LabelTaxonomy t = builtin_taxonomy("language");
  t.stages[0].classes.pop_back();  // drop GoogleLang: leaf falls outside
  CHECK(!t.validate().empty());

  LabelTaxonomy dup = builtin_taxonomy("language");
  dup.leaves.push_back(dup.leaves.front());
  CHECK(!dup.validate().empty());

  LabelTaxonomy no_refine = builtin_taxonomy("language");
  no_refine.stages.erase(no_refine.stages.begin() + 1);  // T5 loses its stage
  CHECK(!no_refine.validate().empty());
}

TEST_CASE("validate_trace catches malformed traces") {
  Trace good = make_trace(840, 7.0, "t5-small");
  good.duration_s = 120.0;
  CHECK(validate_trace(good).empty());

  Trace neg = good;
  neg.power_w[3] = -1.0;
  CHECK(!validate_trace(neg).empty());

  Trace short_power = good;
  short_power.power_w.conservativeResize(839);
  CHECK(!validate_trace(short_power).empty());

  Trace no_seed = good;
  no_seed.meta.seed.reset();  // synthetic traces must carry their seed
  CHECK(!validate_trace(no_seed).empty());

  Trace no_channels = good;
  no_channels.has_power = false;
  no_channels.has_temp = false;
  CHECK(!validate_trace(no_channels).empty());

  Trace hot = good;
  hot.temp_c[0] = 200.0;
  CHECK(!validate_trace(hot).empty());

  Trace zero_rate = good;
  zero_rate.sample_rate_hz = 0.0;
  CHECK(!validate_trace(zero_rate).empty());
}

TEST_CASE("expected_samples rounds rate times duration") {
  CHECK(expected_samples(7.0, 120.0) == 840);
  CHECK(expected_samples(2.0, 3.25) == 7);  // 6.5 rounds away from zero
  CHECK(expected_samples(1.0, 0.4) == 0);
}

TEST_CASE("stratified holdout splits are disjoint, covering, and sized") {
  TraceDataset ds;
  const char* names[] = {"t5-small", "t5-base", "custom-6x8"};
  const int counts[] = {10, 5, 7};
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < counts[c]; ++i) ds.traces.push_back(make_trace(14, 7.0, names[c]));

  for (std::uint64_t seed : {0ull, 1ull, 2ull, 99ull, 12345ull}) {
    ds.split_seed = seed;
    ds.holdout_fraction = 0.2;
    HoldoutSplit split = split_holdout(ds);

    std::set<int> train(split.train_indices.begin(), split.train_indices.end());
    std::set<int> test(split.test_indices.begin(), split.test_indices.end());
    CHECK(train.size() == split.train_indices.size());
    CHECK(test.size() == split.test_indices.size());
    CHECK(train.size() + test.size() == ds.traces.size());
    for (int i : test) CHECK(train.count(i) == 0);

    // round(0.2 * n), floored at one test trace per class.
    std::map<std::string, int> test_per_class;
    for (int i : test) ++test_per_class[ds.traces[i].meta.label->model_name];
    CHECK(test_per_class["t5-small"] == 2);
    CHECK(test_per_class["t5-base"] == 1);
    CHECK(test_per_class["custom-6x8"] == 1);
  }

  // Same seed, same split.
  ds.split_seed = 42;
  HoldoutSplit a = split_holdout(ds);
  HoldoutSplit b = split_holdout(ds);
  CHECK(a.train_indices == b.train_indices);
  CHECK(a.test_indices == b.test_indices);

  TraceDataset tiny;
  tiny.traces.push_back(make_trace(14, 7.0, "t5-small"));
  CHECK_THROWS_AS((void)split_holdout(tiny), DataError);

  TraceDataset unlabeled;
  unlabeled.traces.push_back(make_trace(14, 7.0));
  unlabeled.traces.push_back(make_trace(14, 7.0));
  CHECK_THROWS_AS((void)split_holdout(unlabeled), DataError);
}

TEST_CASE("per-class counts tally model names") {
  TraceDataset ds;
  ds.traces.push_back(make_trace(14, 7.0, "t5-small"));
  ds.traces.push_back(make_trace(14, 7.0, "t5-small"));
  ds.traces.push_back(make_trace(14, 7.0, "t5-base"));
  auto counts = ds.per_class_counts();
  CHECK(counts["t5-small"] == 2);
  CHECK(counts["t5-base"] == 1);
}

TEST_CASE("trace text round-trips byte for byte") {
  Trace t = make_trace(12, 7.0, "custom-12x16");
  t.meta.scenario = NoiseScenario{{BackgroundKind::matmul, BackgroundKind::cnn_classify}};
  t.meta.gpu_name = "synthetic-v1";

  const std::string once = format_trace(t);
  Trace parsed = parse_trace(once);
  const std::string twice = format_trace(parsed);
  CHECK(once == twice);

  CHECK(parsed.sample_rate_hz == t.sample_rate_hz);
  CHECK(parsed.samples() == 12);
  REQUIRE(parsed.meta.label.has_value());
  CHECK(parsed.meta.label->model_name == "custom-12x16");
  CHECK(parsed.meta.label->attention_heads == 16);
  REQUIRE(parsed.meta.scenario.has_value());
  CHECK(parsed.meta.scenario->to_string() == "matmul,cnn_classify");
  REQUIRE(parsed.meta.seed.has_value());
  CHECK(*parsed.meta.seed == 7u);
}

TEST_CASE("trace files survive the disk round trip") {
  fs::path dir = temp_dir("io");
  Trace t = make_trace(30, 7.0, "t5-small");
  const std::string path = (dir / "a.trace").string();
  write_trace_file(path, t);
  Trace back = read_trace_file(path);
  CHECK(format_trace(back) == format_trace(t));
  CHECK_THROWS_AS((void)read_trace_file((dir / "missing.trace").string()), DataError);

  CHECK_THROWS_AS((void)parse_trace("# source=synthetic\n1,2\n"), DataError);
  CHECK_THROWS_AS((void)parse_trace("# broken header\n"), DataError);
}

TEST_CASE("dataset directories round trip through the manifest") {
  fs::path dir = temp_dir("ds");
  TraceDataset ds;
  ds.traces.push_back(make_trace(14, 7.0, "t5-small"));
  ds.traces.push_back(make_trace(14, 7.0, "Helsinki-NLP/opus-mt-en-fr"));
  write_dataset(dir.string(), ds);

  CHECK(fs::exists(dir / "manifest.tsv"));
  auto rows = read_manifest((dir / "manifest.tsv").string());
  REQUIRE(rows.size() == 2u);
  CHECK(rows[1].family == "MarianMT");
  // Slash in the model name must not escape into the path.
  CHECK(rows[1].path.find('/') == std::string::npos);

  TraceDataset back = read_dataset(dir.string());
  REQUIRE(back.traces.size() == 2u);
  CHECK(back.traces[0].meta.label->model_name == "t5-small");
  CHECK(back.traces[1].meta.label->model_name == "Helsinki-NLP/opus-mt-en-fr");

  CHECK_THROWS_AS((void)read_dataset((dir / "nowhere").string()), DataError);
}

TEST_CASE("unlabeled manifest rows use dashes") {
  fs::path dir = temp_dir("manifest");
  append_manifest_row((dir / "manifest.tsv").string(), {"x.trace", "-", "-"});
  auto rows = read_manifest((dir / "manifest.tsv").string());
  REQUIRE(rows.size() == 1u);
  CHECK(rows[0].family == "-");
  CHECK(rows[0].model_name == "-");
}

TEST_CASE("sanitize_for_filename keeps safe names and flattens the rest") {
  CHECK(sanitize_for_filename("custom-6x8") == "custom-6x8");
  const std::string s = sanitize_for_filename("Helsinki-NLP/opus-mt-en-fr");
  CHECK(s.find('/') == std::string::npos);
  CHECK(!s.empty());
  CHECK(sanitize_for_filename("a b\tc") .find(' ') == std::string::npos);
}

TEST_CASE("config files parse sections, comments, and fallbacks") {
  ConfigFile cfg = ConfigFile::parse(
      "# comment\n"
      "[power]\n"
      "p_idle_w = 2.5\n"
      "alpha_enc_w=24\n"
      "; another comment\n"
      "[trace]\n"
      "label = t5-small\n"
      "count = 12\n");
  CHECK(cfg.has("power", "p_idle_w"));
  CHECK(!cfg.has("power", "p_cap_w"));
  CHECK(cfg.get_double("power", "p_idle_w", 0.0) == 2.5);
  CHECK(cfg.get_double("power", "alpha_enc_w", 0.0) == 24.0);
  CHECK(cfg.get_double("power", "p_cap_w", 300.0) == 300.0);
  CHECK(cfg.get_int("trace", "count", 0) == 12);
  CHECK(cfg.get_string("trace", "label", "") == "t5-small");
  CHECK(cfg.get_string("trace", "missing", "dflt") == "dflt");
  CHECK(cfg.get("trace", "label") == "t5-small");
  CHECK_THROWS_AS((void)cfg.get("trace", "missing"), DataError);
  CHECK_THROWS_AS((void)cfg.get_int("trace", "label", 0), DataError);

  // Keys before any section land in the unnamed section.
  ConfigFile bare = ConfigFile::parse("loose = 1\n");
  CHECK(bare.get_int("", "loose", 0) == 1);

  CHECK_THROWS_AS((void)ConfigFile::parse("[s]\nno equals sign\n"), DataError);
  CHECK_THROWS_AS((void)ConfigFile::parse("[unterminated\n"), DataError);
  CHECK_THROWS_AS((void)ConfigFile::load("/nonexistent/path.ini"), DataError);
}

TEST_CASE("noise scenario string round trip") {
  NoiseScenario s;
  CHECK(s.to_string() == "");
  CHECK(NoiseScenario::parse("").count() == 0);

  s.background = {BackgroundKind::matmul, BackgroundKind::vit_inference};
  CHECK(s.to_string() == "matmul,vit_inference");
  NoiseScenario back = NoiseScenario::parse("matmul,vit_inference");
  CHECK(back.background == s.background);
  CHECK_THROWS_AS((void)NoiseScenario::parse("matmul,quicksort"), DataError);

  NoiseScenario too_many;
  too_many.background.assign(9, BackgroundKind::matmul);
  CHECK_THROWS_AS((void)NoiseScenario::parse("matmul,matmul,matmul,matmul,matmul,"
                                             "matmul,matmul,matmul,matmul"),
                  DataError);
}

TEST_CASE("family and source enums round trip through strings") {
  for (Family f : {Family::T5, Family::MarianMT, Family::META, Family::GoogleLang,
                   Family::Custom, Family::GoogleViT, Family::AppleViT,
                   Family::MetaViT, Family::MicrosoftViT})
    CHECK(family_from_string(to_string(f)) == f);
  for (TraceSource s :
       {TraceSource::synthetic, TraceSource::live, TraceSource::replay})
    CHECK(source_from_string(to_string(s)) == s);
  CHECK_THROWS_AS((void)family_from_string("Oracle"), DataError);
}
