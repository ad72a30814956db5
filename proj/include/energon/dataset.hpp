#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "energon/trace.hpp"

namespace energon {

// Labeled trace collection plus the split bookkeeping used by the
// evaluation protocol.
struct TraceDataset {
  std::vector<Trace> traces;  // every trace carries a label
  std::uint64_t split_seed = 0;
  double holdout_fraction = 0.2;

  // model_name -> trace count.
  std::map<std::string, int> per_class_counts() const;
};

struct HoldoutSplit {
  std::vector<int> train_indices;
  std::vector<int> test_indices;
};

// Deterministic stratified holdout: per class, round(fraction * n) test
// traces (at least 1), chosen by a seeded shuffle. DataError when any class
// has fewer than 2 traces or a trace is unlabeled.
HoldoutSplit split_holdout(const TraceDataset& ds);

}  // namespace energon
