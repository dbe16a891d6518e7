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

#ifndef BACON_POSTERIOR_H_
#define BACON_POSTERIOR_H_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "bacon/confidence.h"
#include "bacon/distributions.h"
#include "bacon/geometry.h"

namespace bacon {

// Per-class prior weights used in the Bayes numerator.
class ClassWeights {
 public:
  // Throws ConfigError on negative/non-finite entries or all-zero weights.
  explicit ClassWeights(std::vector<double> values);
  static ClassWeights uniform(std::size_t num_classes);

  std::size_t size() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  bool is_uniform() const;

 private:
  std::vector<double> values_;
};

enum class Denominator {
  // P(j|phi_j) = w_j P(phi_j|j) / sum_i w_i P(phi_i|i): each class evaluated
  // at its own node angle under its own diagonal model.
  kOwnNode,
  // Per node j: w_j P(phi_j|j) / sum_i w_i P(phi_j|i) over the off-diagonal
  // cells of node j, then the row is renormalised to sum to one.
  kPerNodeMixture,
};

struct BaconOptions {
  Denominator denominator = Denominator::kOwnNode;
  // Overrides the tag otherwise derived from the weights.
  std::optional<EstimatorTag> tag;
};

struct BaconResult {
  ConfidenceMatrix confidences;
  // Rows where every numerator vanished; these carry the normalised weights.
  std::vector<std::size_t> fallback_rows;
};

// Bayes-rule confidences from angle likelihoods at the table's delta.
// Numerators are formed in log space and normalised after max-subtraction.
// Tag is kBacon for uniform weights and kBaconWeighted otherwise.
BaconResult bacon_confidences(std::span<const AngleRecord> angles,
                              const LikelihoodTable& table,
                              const ClassWeights& weights,
                              const BaconOptions& options = {});

// Same computation at an explicit delta, leaving the table untouched.
BaconResult bacon_confidences_at(std::span<const AngleRecord> angles,
                                 const LikelihoodTable& table,
                                 const ClassWeights& weights, double delta,
                                 const BaconOptions& options = {});

inline constexpr double kDeltaGridMin = 1e-4;
inline constexpr double kDeltaGridMax = 0.5;
inline constexpr std::size_t kDeltaGridSize = 64;

// 64 log-spaced points on [1e-4, 0.5] with exact endpoints.
std::vector<double> delta_grid();

struct DeltaCalibration {
  double delta = 0.0;
  std::vector<double> grid;
  std::vector<double> holdout_ece;
};

// Picks the grid delta minimising hold-out ECE (M = bins, default K-1),
// breaking ties toward the smaller delta, and stores it in `table`.
// Throws CalibrationError on an empty hold-out set.
DeltaCalibration calibrate_delta(LikelihoodTable& table,
                                 const ClassWeights& weights,
                                 std::span<const AngleRecord> holdout,
                                 std::size_t bins = 0,
                                 const BaconOptions& options = {});

}  // namespace bacon

#endif  // BACON_POSTERIOR_H_
