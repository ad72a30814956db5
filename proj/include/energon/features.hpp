#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "energon/trace.hpp"

namespace energon {

// Fixed-size model input: row 0 = power, row 1 = temperature, each resampled
// to `length` and z-normalized (population sd). A constant channel maps to
// all zeros (sd floor 1e-8).
struct FeatureTensor {
  Eigen::MatrixXd values;  // 2 x length
  std::optional<Label> label;

  Eigen::Index length() const { return values.cols(); }
};

inline constexpr int kFeatureChannels = 2;
inline constexpr int kDefaultFeatureLength = 840;  // 7 Hz * 120 s

// Linear resampling to `target_len`: output j reads input position
// j * (n / target_len), clamped to the last sample, so equal lengths are the
// identity and a 2x upsample keeps every input sample on the even grid.
Eigen::ArrayXd resample_linear(const Eigen::ArrayXd& x, Eigen::Index target_len);

// z-normalize in place semantics: returns (x - mean) / sd, zeros when sd
// under the 1e-8 floor.
Eigen::ArrayXd znorm(const Eigen::ArrayXd& x);

// Resample then normalize both channels; copies the label. DataError when a
// channel is absent or the trace fails validation.
FeatureTensor preprocess(const Trace& t, Eigen::Index target_len = kDefaultFeatureLength);

// Order-preserving batch preprocess; on failure reports the first failing
// trace index in the error message.
std::vector<FeatureTensor> batch_features(const std::vector<Trace>& traces,
                                          Eigen::Index target_len = kDefaultFeatureLength);

}  // namespace energon
