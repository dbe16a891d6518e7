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

#ifndef BACON_STATS_H_
#define BACON_STATS_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace bacon {

double mean(std::span<const double> xs);
// n - 1 denominator; nullopt for fewer than two values.
std::optional<double> sample_std(std::span<const double> xs);
// n - 1 denominator; nullopt for fewer than two values.
std::optional<double> sample_variance(std::span<const double> xs);

// 1-based ranks with ties sharing their average rank.
std::vector<double> average_ranks(std::span<const double> xs);

double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);

enum class Alternative { kLess, kGreater, kTwoSided };

// Monte Carlo permutation p-value for Spearman correlation: fraction of
// `permutations` random relabelings (plus the observed one) at least as
// extreme as the observed statistic.
double spearman_permutation_p_value(std::span<const double> x,
                                    std::span<const double> y,
                                    Alternative alternative,
                                    std::size_t permutations,
                                    std::uint64_t seed);

}  // namespace bacon

#endif  // BACON_STATS_H_
