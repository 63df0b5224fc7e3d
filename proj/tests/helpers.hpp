#pragma once

#include "asymdec/dataset.hpp"

#include <random>
#include <string>
#include <vector>

namespace testing {

// n rows of standard-normal features; labels from a noisy linear index.
inline asymdec::Dataset random_dataset(std::size_t n, std::size_t dim, std::uint64_t seed,
                                       bool with_groups = false) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  asymdec::Dataset data;
  for (std::size_t j = 0; j < dim; ++j) data.feature_names.push_back("x" + std::to_string(j));
  data.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  data.y.resize(n);
  if (with_groups) data.group.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double index = 0.3;
    for (std::size_t j = 0; j < dim; ++j) {
      const double v = normal(gen);
      data.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      index += (j % 2 == 0 ? 1.0 : -0.5) * v;
    }
    data.y[i] = index + normal(gen) >= 0 ? 1 : -1;
    if (with_groups) data.group[i] = static_cast<int>(gen() % 2);
  }
  return data;
}

}  // namespace testing
