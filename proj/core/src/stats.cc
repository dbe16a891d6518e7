/*
 * Copyright 2026 The BACON Calibration Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "bacon/stats.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "bacon/errors.h"

namespace bacon {

double mean(std::span<const double> xs) {
  if (xs.empty()) throw AggregationError("mean of an empty set");
  return std::accumulate(xs.begin(), xs.end(), 0.0) /
         static_cast<double>(xs.size());
}

std::optional<double> sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) return std::nullopt;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size() - 1);
}

std::optional<double> sample_std(std::span<const double> xs) {
  const auto v = sample_variance(xs);
  if (!v) return std::nullopt;
  return std::sqrt(*v);
}

std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw AggregationError("correlation needs two equal-length series, n >= 2");
  }
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

double spearman_permutation_p_value(std::span<const double> x,
                                    std::span<const double> y,
                                    Alternative alternative,
                                    std::size_t permutations,
                                    std::uint64_t seed) {
  const auto rx = average_ranks(x);
  auto ry = average_ranks(y);
  const double observed = pearson(rx, ry);
  // Guards the comparison against rounding in the permuted statistic.
  constexpr double kSlack = 1e-12;

  std::mt19937_64 rng(seed);
  std::size_t extreme = 1;
  for (std::size_t p = 0; p < permutations; ++p) {
    std::shuffle(ry.begin(), ry.end(), rng);
    const double r = pearson(rx, ry);
    bool hit = false;
    switch (alternative) {
      case Alternative::kLess: hit = r <= observed + kSlack; break;
      case Alternative::kGreater: hit = r >= observed - kSlack; break;
      case Alternative::kTwoSided:
        hit = std::abs(r) >= std::abs(observed) - kSlack;
        break;
    }
    extreme += hit ? 1 : 0;
  }
  return static_cast<double>(extreme) / static_cast<double>(permutations + 1);
}

}  // namespace bacon
