#include "energon/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "energon/errors.hpp"
#include "energon/trace_io.hpp"

namespace energon {

namespace {

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open report file for writing: " + path);
  out << content;
  out.flush();
  if (!out) throw DataError("short write on report file: " + path);
}

void write_channel_dat(const std::string& path, const Eigen::ArrayXd& values,
                       double sample_rate_hz) {
  std::ostringstream out;
  char buf[64];
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.6f\t%.6f\n",
                  static_cast<double>(i) / sample_rate_hz, values[i]);
    out << buf;
  }
  write_text(path, out.str());
}

}  // namespace

std::string render_summary(const std::vector<EvalReport>& reports) {
  std::ostringstream out;
  out << "stage\tfolds\tmax_accuracy\tmean_accuracy\n";
  for (const EvalReport& r : reports) {
    out << r.stage << "\t" << r.fold_accuracy.size() << "\t"
        << fixed4(r.max_accuracy) << "\t" << fixed4(r.mean_accuracy) << "\n";
  }
  out << "# mean_accuracy averages the per-fold accuracies\n";
  return out.str();
}

std::string render_confusion_tsv(const EvalReport& report) {
  if (report.confusion.rows() != static_cast<Eigen::Index>(report.classes.size()))
    throw DataError("confusion matrix size does not match class list");
  std::ostringstream out;
  out << "truth\\pred";
  for (const auto& c : report.classes) out << "\t" << c;
  out << "\n";
  for (Eigen::Index r = 0; r < report.confusion.rows(); ++r) {
    out << report.classes[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < report.confusion.cols(); ++c)
      out << "\t" << report.confusion(r, c);
    out << "\n";
  }
  return out.str();
}

void make_report(const std::string& dir, const std::vector<EvalReport>& reports,
                 const std::vector<std::pair<std::string, Trace>>& plot_traces) {
  if (reports.empty() && plot_traces.empty())
    throw DataError("nothing to report: no evaluations and no traces");

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create report directory: " + dir);

  if (!reports.empty()) {
    write_text(dir + "/summary.txt", render_summary(reports));
    for (const EvalReport& r : reports)
      write_text(dir + "/" + sanitize_for_filename(r.stage) + ".confusion.tsv",
                 render_confusion_tsv(r));
  }

  if (!plot_traces.empty()) {
    const std::string plots = dir + "/plots";
    fs::create_directories(plots, ec);
    if (ec) throw DataError("cannot create plot directory: " + plots);
    for (const auto& [name, trace] : plot_traces) {
      const std::string base = plots + "/" + sanitize_for_filename(name);
      write_trace_file(base + ".trace", trace);
      if (trace.has_power)
        write_channel_dat(base + ".power.dat", trace.power_w, trace.sample_rate_hz);
      if (trace.has_temp)
        write_channel_dat(base + ".temp.dat", trace.temp_c, trace.sample_rate_hz);
    }
  }
}

}  // namespace energon
