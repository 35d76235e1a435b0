#include "ordcausal/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "ordcausal/errors.hpp"

namespace ordcausal {

Dataset Dataset::create(std::vector<int> y, std::vector<int> a, Matrix x, int L) {
  const std::size_t n = y.size();
  if (n == 0) throw ConfigError("dataset is empty");
  if (a.size() != n)
    throw ConfigError("treatment column has " + std::to_string(a.size()) +
                      " rows but outcome has " + std::to_string(n));
  if (x.rows() != n)
    throw ConfigError("covariate matrix has " + std::to_string(x.rows()) +
                      " rows but outcome has " + std::to_string(n));

  int max_y = 0;
  std::size_t n1 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] != 0 && a[i] != 1)
      throw ConfigError("treatment must be 0 or 1, found " + std::to_string(a[i]) +
                        " at row " + std::to_string(i + 1));
    if (y[i] < 0)
      throw ConfigError("outcome must be nonnegative, found " + std::to_string(y[i]) +
                        " at row " + std::to_string(i + 1));
    max_y = std::max(max_y, y[i]);
    n1 += static_cast<std::size_t>(a[i]);
  }
  if (n1 == 0) throw ConfigError("no treated units");
  if (n1 == n) throw ConfigError("no control units");

  if (L < 0) L = max_y + 1;
  if (L < 2) throw ConfigError("outcome must have at least 2 levels");
  if (max_y >= L)
    throw ConfigError("outcome value " + std::to_string(max_y) +
                      " exceeds declared level count " + std::to_string(L));

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      if (!std::isfinite(x(i, j)))
        throw ConfigError("nonfinite covariate at row " + std::to_string(i + 1));
    }
  }

  Dataset d;
  d.n = n;
  d.L = L;
  d.y = std::move(y);
  d.a = std::move(a);
  d.x = std::move(x);
  return d;
}

Dataset Dataset::subset(std::span<const std::size_t> idx) const {
  Dataset d;
  d.n = idx.size();
  d.L = L;
  d.y.reserve(idx.size());
  d.a.reserve(idx.size());
  d.x = Matrix(idx.size(), x.cols());
  std::size_t r = 0;
  for (std::size_t i : idx) {
    d.y.push_back(y[i]);
    d.a.push_back(a[i]);
    for (std::size_t j = 0; j < x.cols(); ++j) d.x(r, j) = x(i, j);
    ++r;
  }
  return d;
}

bool LevelMap::identity() const {
  for (std::size_t k = 0; k < original_levels.size(); ++k) {
    if (original_levels[k] != static_cast<int>(k)) return false;
  }
  return true;
}

std::pair<Dataset, LevelMap> collapse_levels(const Dataset& data) {
  std::map<int, int> remap;
  for (int yi : data.y) remap[yi] = 0;
  LevelMap map;
  map.original_levels.reserve(remap.size());
  int next = 0;
  for (auto& [orig, code] : remap) {
    code = next++;
    map.original_levels.push_back(orig);
  }
  if (remap.size() < 2) throw ConfigError("outcome must take at least 2 distinct values");

  std::vector<int> y2(data.n);
  for (std::size_t i = 0; i < data.n; ++i) y2[i] = remap.at(data.y[i]);
  Dataset d = Dataset::create(std::move(y2), data.a, data.x, static_cast<int>(remap.size()));
  return {std::move(d), std::move(map)};
}

}  // namespace ordcausal
