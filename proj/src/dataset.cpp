#include "energon/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "energon/errors.hpp"
#include "energon/rng.hpp"

namespace energon {

std::map<std::string, int> TraceDataset::per_class_counts() const {
  std::map<std::string, int> counts;
  for (const auto& t : traces) {
    if (!t.meta.label) throw DataError("dataset holds an unlabeled trace");
    ++counts[t.meta.label->model_name];
  }
  return counts;
}

HoldoutSplit split_holdout(const TraceDataset& ds) {
  if (!(ds.holdout_fraction > 0.0 && ds.holdout_fraction < 1.0))
    throw DataError("holdout fraction must lie in (0, 1)");

  // Group indices per class; map iteration fixes the class order.
  std::map<std::string, std::vector<int>> by_class;
  for (int i = 0; i < static_cast<int>(ds.traces.size()); ++i) {
    const auto& label = ds.traces[i].meta.label;
    if (!label) throw DataError("dataset holds an unlabeled trace");
    by_class[label->model_name].push_back(i);
  }

  HoldoutSplit split;
  std::uint64_t class_index = 0;
  for (auto& [name, indices] : by_class) {
    const int n = static_cast<int>(indices.size());
    if (n < 2)
      throw DataError("class " + name + " holds " + std::to_string(n) +
                      " trace(s); holdout needs at least 2");
    Rng rng(splitmix64(ds.split_seed + class_index++));
    for (int i = n - 1; i > 0; --i)
      std::swap(indices[i], indices[rng.below(static_cast<std::uint64_t>(i + 1))]);

    int n_test = static_cast<int>(std::llround(ds.holdout_fraction * n));
    n_test = std::clamp(n_test, 1, n - 1);
    for (int i = 0; i < n; ++i)
      (i < n_test ? split.test_indices : split.train_indices).push_back(indices[i]);
  }
  std::sort(split.train_indices.begin(), split.train_indices.end());
  std::sort(split.test_indices.begin(), split.test_indices.end());
  return split;
}

}  // namespace energon
