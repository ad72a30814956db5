#include "energon/features.hpp"

#include <cmath>

#include "energon/errors.hpp"

namespace energon {

Eigen::ArrayXd resample_linear(const Eigen::ArrayXd& x, Eigen::Index target_len) {
  const Eigen::Index n = x.size();
  if (n < 1) throw DataError("cannot resample an empty channel");
  if (target_len < 1) throw DataError("resample target length must be >= 1");
  if (n == target_len) return x;

  Eigen::ArrayXd out(target_len);
  const double scale = static_cast<double>(n) / static_cast<double>(target_len);
  for (Eigen::Index j = 0; j < target_len; ++j) {
    double pos = static_cast<double>(j) * scale;
    if (pos > static_cast<double>(n - 1)) pos = static_cast<double>(n - 1);
    const auto lo = static_cast<Eigen::Index>(std::floor(pos));
    const Eigen::Index hi = std::min(lo + 1, n - 1);
    const double frac = pos - static_cast<double>(lo);
    out[j] = x[lo] + frac * (x[hi] - x[lo]);
  }
  return out;
}

Eigen::ArrayXd znorm(const Eigen::ArrayXd& x) {
  const double mean = x.mean();
  const double sd = std::sqrt((x - mean).square().mean());  // population sd
  if (sd < 1e-8) return Eigen::ArrayXd::Zero(x.size());
  return (x - mean) / sd;
}

FeatureTensor preprocess(const Trace& t, Eigen::Index target_len) {
  if (!t.has_power) throw DataError("trace is missing the power channel");
  if (!t.has_temp) throw DataError("trace is missing the temperature channel");
  if (const auto violations = validate_trace(t); !violations.empty())
    throw DataError("invalid trace: " + violations.front());

  FeatureTensor f;
  f.values.resize(kFeatureChannels, target_len);
  f.values.row(0) = znorm(resample_linear(t.power_w, target_len)).matrix().transpose();
  f.values.row(1) = znorm(resample_linear(t.temp_c, target_len)).matrix().transpose();
  f.label = t.meta.label;
  return f;
}

std::vector<FeatureTensor> batch_features(const std::vector<Trace>& traces,
                                          Eigen::Index target_len) {
  std::vector<FeatureTensor> out;
  out.reserve(traces.size());
  for (std::size_t i = 0; i < traces.size(); ++i) {
    try {
      out.push_back(preprocess(traces[i], target_len));
    } catch (const Error& e) {
      throw DataError("trace " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace energon
