#pragma once

#include <Eigen/Core>
#include <vector>

namespace energon {

// Decoder staircase analysis of a power sequence.
struct StepAnalysis {
  int count = 0;                     // plateaus in the analyzed ramp segment
  std::vector<int> boundaries;       // strictly increasing sample indices
  double mean_rise_w = 0.0;          // mean boundary rise within the segment
  int smooth_window = 3;
};

// Moving average with centered window (edges truncate).
Eigen::ArrayXd smooth_moving_average(const Eigen::ArrayXd& x, int window);

// Counts plateaus within the largest monotone ramp segment. A boundary is a
// run of rising smoothed forward differences with cumulative rise >=
// min_rise_w arriving after >= 2 plateau samples; a leading boundary whose
// rise dwarfs the segment's median step (baseline -> workload onset) is
// trimmed together with its leading plateau. count = boundaries + 1 inside
// the segment; a signal with no boundary at all reports count 0.
StepAnalysis count_steps(const Eigen::ArrayXd& power_w, int smooth_window = 3,
                         double min_rise_w = 0.5);

// Linear fit of mean step rise against layer count over labeled clean
// traces; estimation snaps to the nearest registered layer count.
struct LayerCalibration {
  double slope = 0.0;      // watts per layer
  double intercept = 0.0;  // watts
  std::vector<int> registered_layers;
};

struct RiseSample {
  double mean_rise_w = 0.0;
  int layers = 0;
};

LayerCalibration fit_layer_calibration(const std::vector<RiseSample>& samples);
int estimate_layers_from_steps(const StepAnalysis& analysis,
                               const LayerCalibration& calibration);

}  // namespace energon
