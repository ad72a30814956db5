#pragma once

#include <string>
#include <vector>

#include "energon/dataset.hpp"
#include "energon/trace.hpp"

namespace energon {

// On-disk trace format:
//   '#' header lines, one "# key=value" per meta field (fixed key order),
//   then one sample per line: "<t_seconds>,<power_w>,<temp_c>", every value
//   printed with exactly six decimals. Reading a written file and writing it
//   again reproduces the bytes.
std::string format_trace(const Trace& t);
Trace parse_trace(const std::string& text);

void write_trace_file(const std::string& path, const Trace& t);
Trace read_trace_file(const std::string& path);

// Manifest row: "path<TAB>family<TAB>model_name". Paths are relative to the
// manifest's directory. Unlabeled traces record "-" in both label columns.
struct ManifestRow {
  std::string path;
  std::string family;
  std::string model_name;
};

std::vector<ManifestRow> read_manifest(const std::string& manifest_path);
void append_manifest_row(const std::string& manifest_path, const ManifestRow& row);

// Dataset directory = trace files + "manifest.tsv".
void write_dataset(const std::string& dir, const TraceDataset& ds);
TraceDataset read_dataset(const std::string& dir);

// "custom-6x8" stays as is; "Helsinki-NLP/opus-mt-en-fr" becomes a safe
// file-name fragment.
std::string sanitize_for_filename(const std::string& name);

}  // namespace energon
