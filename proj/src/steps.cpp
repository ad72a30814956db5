#include "energon/steps.hpp"

#include <algorithm>
#include <cmath>

#include "energon/errors.hpp"

namespace energon {

Eigen::ArrayXd smooth_moving_average(const Eigen::ArrayXd& x, int window) {
  if (window < 1) throw DataError("smoothing window must be >= 1");
  const Eigen::Index n = x.size();
  Eigen::ArrayXd out(n);
  const Eigen::Index half = window / 2;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, i - half);
    const Eigen::Index hi = std::min(n - 1, i + half);
    out[i] = x.segment(lo, hi - lo + 1).mean();
  }
  return out;
}

namespace {

// A run of same-signed smoothed differences whose cumulative change cleared
// the rise threshold.
struct Edge {
  int start = 0;   // diff index where the run begins
  int end = 0;     // diff index one past the run
  double total = 0.0;
  bool rising = false;
};

std::vector<Edge> significant_edges(const Eigen::ArrayXd& smooth, double min_rise_w) {
  // Per-difference dead zone: half the cumulative threshold. Differences
  // inside it are plateau, whatever their sign.
  const double eps = min_rise_w / 2.0;
  std::vector<Edge> edges;
  Edge run;
  bool open = false;
  auto close = [&]() {
    if (open && std::abs(run.total) >= min_rise_w) edges.push_back(run);
    open = false;
  };
  for (int i = 0; i + 1 < smooth.size(); ++i) {
    const double d = smooth[i + 1] - smooth[i];
    const int sign = d > eps ? 1 : (d < -eps ? -1 : 0);
    if (sign == 0) {
      close();
      continue;
    }
    const bool rising = sign > 0;
    if (open && run.rising != rising) close();
    if (!open) {
      run = Edge{i, i + 1, 0.0, rising};
      open = true;
    }
    run.total += d;
    run.end = i + 1;
  }
  close();
  return edges;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

StepAnalysis count_steps(const Eigen::ArrayXd& power_w, int smooth_window,
                         double min_rise_w) {
  if (!(min_rise_w > 0)) throw DataError("min_rise_w must be positive");
  StepAnalysis res;
  res.smooth_window = smooth_window;
  if (power_w.size() < 3) return res;

  const Eigen::ArrayXd smooth = smooth_moving_average(power_w, smooth_window);
  const std::vector<Edge> edges = significant_edges(smooth, min_rise_w);

  // Segments are the stretches between drops; each holds its rise edges.
  struct Segment {
    int begin = 0;  // first sample index
    int end = 0;    // one past the last sample index
    std::vector<Edge> rises;
  };
  std::vector<Segment> segments;
  Segment cur;
  cur.begin = 0;
  for (const Edge& e : edges) {
    if (e.rising) {
      // A rise that resumes within 2 samples of the previous one is the same
      // step edge split by jitter: merge instead of opening a new boundary.
      if (!cur.rises.empty() && e.start - cur.rises.back().end < 2) {
        cur.rises.back().end = e.end;
        cur.rises.back().total += e.total;
      } else {
        cur.rises.push_back(e);
      }
    } else {
      cur.end = e.start + 1;
      segments.push_back(cur);
      cur = Segment{};
      cur.begin = e.end;
    }
  }
  cur.end = static_cast<int>(power_w.size());
  segments.push_back(cur);

  const Segment* best = nullptr;
  for (const Segment& s : segments)
    if (!best || (s.end - s.begin) > (best->end - best->begin)) best = &s;
  if (!best || best->rises.empty()) return res;

  std::vector<Edge> rises = best->rises;
  // Baseline -> workload onset shows as a leading boundary far above the
  // staircase's typical rise; drop it along with its leading plateau.
  if (rises.size() >= 3) {
    std::vector<double> others;
    for (std::size_t i = 1; i < rises.size(); ++i) others.push_back(rises[i].total);
    if (rises.front().total > 2.0 * median(others)) rises.erase(rises.begin());
  }

  res.count = static_cast<int>(rises.size()) + 1;
  double total = 0.0;
  for (const Edge& e : rises) {
    res.boundaries.push_back(e.start + 1);
    total += e.total;
  }
  res.mean_rise_w = total / static_cast<double>(rises.size());
  return res;
}

LayerCalibration fit_layer_calibration(const std::vector<RiseSample>& samples) {
  if (samples.size() < 2)
    throw DataError("layer calibration needs at least two samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(samples.size());
  for (const RiseSample& s : samples) {
    const double x = static_cast<double>(s.layers);
    sx += x;
    sy += s.mean_rise_w;
    sxx += x * x;
    sxy += x * s.mean_rise_w;
  }
  const double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-12)
    throw DataError("layer calibration is degenerate: all samples share one layer count");

  LayerCalibration cal;
  cal.slope = (n * sxy - sx * sy) / denom;
  cal.intercept = (sy - cal.slope * sx) / n;
  for (const RiseSample& s : samples) cal.registered_layers.push_back(s.layers);
  std::sort(cal.registered_layers.begin(), cal.registered_layers.end());
  cal.registered_layers.erase(
      std::unique(cal.registered_layers.begin(), cal.registered_layers.end()),
      cal.registered_layers.end());
  return cal;
}

int estimate_layers_from_steps(const StepAnalysis& analysis,
                               const LayerCalibration& calibration) {
  if (calibration.registered_layers.empty())
    throw DataError("layer calibration holds no layer counts");
  if (calibration.slope == 0.0)
    throw DataError("layer calibration slope is zero");
  const double raw = (analysis.mean_rise_w - calibration.intercept) / calibration.slope;
  int best = calibration.registered_layers.front();
  for (int candidate : calibration.registered_layers)
    if (std::abs(candidate - raw) < std::abs(best - raw)) best = candidate;
  return best;
}

}  // namespace energon
