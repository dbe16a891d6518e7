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

#include "bacon/confidence.h"

#include <cmath>
#include <string>

#include "bacon/errors.h"

namespace bacon {

std::string_view estimator_name(EstimatorTag tag) {
  switch (tag) {
    case EstimatorTag::kBacon: return "bacon";
    case EstimatorTag::kBaconWeighted: return "bacon_weighted";
    case EstimatorTag::kSoftmax: return "softmax";
    case EstimatorTag::kTScaledSoftmax: return "tscaled_softmax";
  }
  return "?";
}

EstimatorTag parse_estimator(std::string_view name) {
  for (EstimatorTag t : kAllEstimators) {
    if (estimator_name(t) == name) return t;
  }
  throw ConfigError("unknown estimator '" + std::string(name) + "'");
}

ConfidenceMatrix::ConfidenceMatrix(Matrix probs, std::vector<int> labels,
                                   EstimatorTag tag)
    : probs_(std::move(probs)), labels_(std::move(labels)), tag_(tag) {
  if (probs_.cols() < 2) {
    throw ValidationError("confidence matrix needs K >= 2 classes");
  }
  if (labels_.size() != probs_.rows()) {
    throw ValidationError("confidence matrix has " +
                          std::to_string(probs_.rows()) + " rows but " +
                          std::to_string(labels_.size()) + " labels");
  }
  for (std::size_t i = 0; i < probs_.rows(); ++i) {
    const int y = labels_[i];
    if (y < 0 || static_cast<std::size_t>(y) >= probs_.cols()) {
      throw ValidationError("label " + std::to_string(y) + " out of range");
    }
    double sum = 0.0;
    for (double p : probs_.row(i)) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw ValidationError("probability outside [0, 1] in row " +
                              std::to_string(i));
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      throw ValidationError("row " + std::to_string(i) + " sums to " +
                            std::to_string(sum));
    }
  }
}

int ConfidenceMatrix::predicted(std::size_t i) const {
  const auto r = probs_.row(i);
  std::size_t best = 0;
  for (std::size_t j = 1; j < r.size(); ++j) {
    if (r[j] > r[best]) best = j;
  }
  return static_cast<int>(best);
}

double ConfidenceMatrix::max_confidence(std::size_t i) const {
  return probs_(i, static_cast<std::size_t>(predicted(i)));
}

}  // namespace bacon
