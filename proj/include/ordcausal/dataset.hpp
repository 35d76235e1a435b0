#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "ordcausal/matrix.hpp"

namespace ordcausal {

// Observed data: ordinal outcome y in {0,...,L-1}, binary treatment a,
// covariate rows x (may have zero columns for intercept-only models).
struct Dataset {
  std::size_t n = 0;
  int L = 0;
  std::vector<int> y;
  std::vector<int> a;
  Matrix x;  // n x p

  std::size_t p() const { return x.cols(); }

  // Validates and builds; L < 0 infers max(y)+1. Throws ConfigError on
  // malformed input (wrong sizes, y outside 0..L-1, an arm with no units).
  static Dataset create(std::vector<int> y, std::vector<int> a, Matrix x, int L = -1);

  Dataset subset(std::span<const std::size_t> idx) const;
};

// Maps observed outcome codes onto the contiguous range 0..L'-1.
// original_levels[k] is the source code for new level k.
struct LevelMap {
  std::vector<int> original_levels;
  bool identity() const;
};

// Collapses globally absent levels (codes are remapped onto their sorted
// distinct values). The returned map records the original codes.
std::pair<Dataset, LevelMap> collapse_levels(const Dataset& data);

}  // namespace ordcausal
