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

#ifndef BACON_CONFIDENCE_H_
#define BACON_CONFIDENCE_H_

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "bacon/matrix.h"

namespace bacon {

enum class EstimatorTag { kBacon, kBaconWeighted, kSoftmax, kTScaledSoftmax };

inline constexpr std::array<EstimatorTag, 4> kAllEstimators = {
    EstimatorTag::kBacon, EstimatorTag::kBaconWeighted, EstimatorTag::kSoftmax,
    EstimatorTag::kTScaledSoftmax};

std::string_view estimator_name(EstimatorTag tag);
// Throws ConfigError on an unknown name.
EstimatorTag parse_estimator(std::string_view name);

inline constexpr double kRowSumTolerance = 1e-9;

// N x K per-sample class probabilities plus true labels.
//
// Construction enforces K >= 2, entries in [0, 1], rows summing to 1 within
// kRowSumTolerance and labels in [0, K); violations throw ValidationError.
class ConfidenceMatrix {
 public:
  ConfidenceMatrix(Matrix probs, std::vector<int> labels, EstimatorTag tag);

  std::size_t num_samples() const { return probs_.rows(); }
  std::size_t num_classes() const { return probs_.cols(); }
  EstimatorTag tag() const { return tag_; }

  const Matrix& probs() const { return probs_; }
  std::span<const double> row(std::size_t i) const { return probs_.row(i); }
  const std::vector<int>& labels() const { return labels_; }

  // Row argmax; ties go to the lowest class index.
  int predicted(std::size_t i) const;
  double max_confidence(std::size_t i) const;
  bool correct(std::size_t i) const { return predicted(i) == labels_[i]; }

 private:
  Matrix probs_;
  std::vector<int> labels_;
  EstimatorTag tag_;
};

}  // namespace bacon

#endif  // BACON_CONFIDENCE_H_
