#pragma once

#include <string>
#include <vector>

#include "energon/trace.hpp"
#include "energon/training.hpp"

namespace energon {

// Report bundle written to a directory:
//   summary.txt        stage / max / mean accuracy table
//   <stage>.confusion.tsv   machine-readable confusion matrix per report
//   plots/<name>.trace      trace-format copy (round-trips through the
//                           trace reader)
//   plots/<name>.power.dat  two-column tab-separated "t value" plot data
//   plots/<name>.temp.dat
// DataError when there is nothing to report.
void make_report(const std::string& dir, const std::vector<EvalReport>& reports,
                 const std::vector<std::pair<std::string, Trace>>& plot_traces);

std::string render_summary(const std::vector<EvalReport>& reports);
std::string render_confusion_tsv(const EvalReport& report);

}  // namespace energon
