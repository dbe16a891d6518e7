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

#ifndef BACON_BASELINES_H_
#define BACON_BASELINES_H_

#include <span>
#include <vector>

#include "bacon/confidence.h"
#include "bacon/geometry.h"

namespace bacon {

// Inverse temperature beta = 1/T and the hold-out NLL it achieves.
struct TemperatureParam {
  double beta = 1.0;
  double nll_holdout = 0.0;
  double temperature() const { return 1.0 / beta; }
};

// Row-wise softmax of beta * logits with max-subtraction. Tagged kSoftmax
// when beta == 1 and kTScaledSoftmax otherwise. Throws ConfigError unless
// beta > 0.
ConfidenceMatrix softmax(std::span<const LogitRecord> logits, double beta);
ConfidenceMatrix softmax(std::span<const LogitRecord> logits, double beta,
                         EstimatorTag tag);

// Mean negative log-likelihood -mean log softmax(beta x)[y].
double mean_nll(std::span<const LogitRecord> logits, double beta);

inline constexpr double kBetaGridMin = 0.01;
inline constexpr double kBetaGridMax = 100.0;
inline constexpr std::size_t kBetaGridSize = 50;
inline constexpr double kBetaTolerance = 1e-4;

std::vector<double> beta_grid();

// Grid search over beta_grid() then golden-section refinement of the
// bracket around the global grid minimum; beta = 1 is always a candidate.
// A flat objective returns the first grid point. Throws CalibrationError on
// an empty hold-out set.
TemperatureParam fit_temperature(std::span<const LogitRecord> holdout);

}  // namespace bacon

#endif  // BACON_BASELINES_H_
