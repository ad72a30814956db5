#include "energon/trace_io.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "energon/errors.hpp"

namespace energon {

namespace {

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void header(std::string& out, const std::string& key, const std::string& value) {
  out += "# ";
  out += key;
  out += '=';
  out += value;
  out += '\n';
}

}  // namespace

std::string format_trace(const Trace& t) {
  std::string out;
  header(out, "source", to_string(t.meta.source));
  header(out, "gpu_name", t.meta.gpu_name);
  header(out, "base_temp_c", fmt6(t.meta.base_temp_c));
  if (t.meta.label) {
    header(out, "label_family", to_string(t.meta.label->family));
    header(out, "label_model", t.meta.label->model_name);
    header(out, "label_heads", std::to_string(t.meta.label->attention_heads));
    header(out, "label_layers", std::to_string(t.meta.label->layers));
  }
  if (t.meta.scenario) header(out, "scenario", t.meta.scenario->to_string());
  if (t.meta.seed) header(out, "seed", std::to_string(*t.meta.seed));
  if (t.meta.max_tick_jitter_s)
    header(out, "max_tick_jitter_s", fmt6(*t.meta.max_tick_jitter_s));
  header(out, "sample_rate_hz", fmt6(t.sample_rate_hz));
  header(out, "duration_s", fmt6(t.duration_s));
  header(out, "has_power", t.has_power ? "1" : "0");
  header(out, "has_temp", t.has_temp ? "1" : "0");

  const Eigen::Index n = t.samples();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ts = static_cast<double>(i) / t.sample_rate_hz;
    const double p = (t.has_power && i < t.power_w.size()) ? t.power_w[i] : 0.0;
    const double c = (t.has_temp && i < t.temp_c.size()) ? t.temp_c[i] : 0.0;
    out += fmt6(ts);
    out += ',';
    out += fmt6(p);
    out += ',';
    out += fmt6(c);
    out += '\n';
  }
  return out;
}

Trace parse_trace(const std::string& text) {
  Trace t;
  std::vector<double> power, temp;
  Label label;
  bool saw_label = false;

  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string body = line.substr(1);
      if (!body.empty() && body[0] == ' ') body.erase(0, 1);
      const auto eq = body.find('=');
      if (eq == std::string::npos)
        throw DataError("trace line " + std::to_string(line_no) +
                        ": malformed header");
      const std::string key = body.substr(0, eq);
      const std::string value = body.substr(eq + 1);
      try {
        if (key == "source") t.meta.source = source_from_string(value);
        else if (key == "gpu_name") t.meta.gpu_name = value;
        else if (key == "base_temp_c") t.meta.base_temp_c = std::stod(value);
        else if (key == "label_family") { label.family = family_from_string(value); saw_label = true; }
        else if (key == "label_model") { label.model_name = value; saw_label = true; }
        else if (key == "label_heads") { label.attention_heads = std::stoi(value); saw_label = true; }
        else if (key == "label_layers") { label.layers = std::stoi(value); saw_label = true; }
        else if (key == "scenario") t.meta.scenario = NoiseScenario::parse(value);
        else if (key == "seed") t.meta.seed = std::stoull(value);
        else if (key == "max_tick_jitter_s") t.meta.max_tick_jitter_s = std::stod(value);
        else if (key == "sample_rate_hz") t.sample_rate_hz = std::stod(value);
        else if (key == "duration_s") t.duration_s = std::stod(value);
        else if (key == "has_power") t.has_power = value == "1";
        else if (key == "has_temp") t.has_temp = value == "1";
        // Unknown keys are ignored for forward compatibility.
      } catch (const Error&) {
        throw;
      } catch (const std::exception&) {
        throw DataError("trace line " + std::to_string(line_no) +
                        ": bad value for " + key);
      }
      continue;
    }
    double ts, p, c;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &ts, &p, &c) != 3)
      throw DataError("trace line " + std::to_string(line_no) +
                      ": expected t,power,temp");
    power.push_back(p);
    temp.push_back(c);
  }

  if (saw_label) t.meta.label = label;
  t.power_w = Eigen::Map<Eigen::ArrayXd>(power.data(), static_cast<Eigen::Index>(power.size()));
  t.temp_c = Eigen::Map<Eigen::ArrayXd>(temp.data(), static_cast<Eigen::Index>(temp.size()));
  return t;
}

void write_trace_file(const std::string& path, const Trace& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write trace file: " + path);
  const std::string text = format_trace(t);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw DataError("short write on trace file: " + path);
}

Trace read_trace_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open trace file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_trace(buf.str());
}

std::vector<ManifestRow> read_manifest(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw DataError("cannot open manifest: " + manifest_path);
  std::vector<ManifestRow> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t2 == std::string::npos)
      throw DataError("manifest line " + std::to_string(line_no) +
                      ": expected path<TAB>family<TAB>model_name");
    rows.push_back({line.substr(0, t1), line.substr(t1 + 1, t2 - t1 - 1),
                    line.substr(t2 + 1)});
  }
  return rows;
}

void append_manifest_row(const std::string& manifest_path, const ManifestRow& row) {
  std::ofstream out(manifest_path, std::ios::app | std::ios::binary);
  if (!out) throw DataError("cannot append to manifest: " + manifest_path);
  const std::string line = row.path + "\t" + row.family + "\t" + row.model_name + "\n";
  out.write(line.data(), static_cast<std::streamsize>(line.size()));
  out.flush();
  if (!out) throw DataError("short write on manifest: " + manifest_path);
}

std::string sanitize_for_filename(const std::string& name) {
  std::string out = name;
  for (char& c : out) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
    if (!ok) c = '_';
  }
  return out;
}

void write_dataset(const std::string& dir, const TraceDataset& ds) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const std::string manifest = (fs::path(dir) / "manifest.tsv").string();
  if (fs::exists(manifest)) fs::remove(manifest);

  {
    std::ofstream meta(fs::path(dir) / "dataset.meta");
    meta << "split_seed=" << ds.split_seed << "\n"
         << "holdout_fraction=" << fmt6(ds.holdout_fraction) << "\n";
  }

  int i = 0;
  for (const auto& t : ds.traces) {
    if (!t.meta.label) throw DataError("dataset holds an unlabeled trace");
    char idx[16];
    std::snprintf(idx, sizeof(idx), "%05d", i++);
    const std::string name = std::string("trace_") + idx + "_" +
                             sanitize_for_filename(t.meta.label->model_name) +
                             ".trace";
    write_trace_file((fs::path(dir) / name).string(), t);
    append_manifest_row(manifest, {name, to_string(t.meta.label->family),
                                   t.meta.label->model_name});
  }
}

TraceDataset read_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  TraceDataset ds;

  const fs::path meta_path = fs::path(dir) / "dataset.meta";
  if (fs::exists(meta_path)) {
    std::ifstream meta(meta_path);
    std::string line;
    while (std::getline(meta, line)) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
      if (key == "split_seed") ds.split_seed = std::stoull(value);
      if (key == "holdout_fraction") ds.holdout_fraction = std::stod(value);
    }
  }

  for (const auto& row : read_manifest((fs::path(dir) / "manifest.tsv").string())) {
    Trace t = read_trace_file((fs::path(dir) / row.path).string());
    if (!t.meta.label && row.family != "-") {
      Label l;
      l.family = family_from_string(row.family);
      l.model_name = row.model_name;
      t.meta.label = l;
    }
    ds.traces.push_back(std::move(t));
  }
  return ds;
}

}  // namespace energon
