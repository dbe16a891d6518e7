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

#include "bacon/geometry.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "bacon/errors.h"

namespace bacon {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> row_norms(const Matrix& m, const char* what) {
  std::vector<double> norms(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    norms[r] = std::sqrt(dot(row, row));
    if (!(norms[r] > 0.0) || !std::isfinite(norms[r])) {
      throw DegenerateVectorError(std::string(what) + " row " +
                                  std::to_string(r) +
                                  " has zero or non-finite magnitude");
    }
  }
  return norms;
}

void check_inner_dims(const Matrix& activations, const Matrix& weights) {
  if (activations.cols() != weights.cols()) {
    throw ShapeError("activations have " + std::to_string(activations.cols()) +
                     " columns but weights have " +
                     std::to_string(weights.cols()));
  }
}

}  // namespace

std::vector<AngleRecord> compute_angles(const Matrix& activations,
                                        const Matrix& weights,
                                        AngleConvention convention) {
  check_inner_dims(activations, weights);
  const auto a_norms = row_norms(activations, "activation");
  const auto w_norms = row_norms(weights, "weight");

  std::vector<AngleRecord> out(activations.rows());
  for (std::size_t i = 0; i < activations.rows(); ++i) {
    auto& rec = out[i];
    rec.sample_id = static_cast<std::int64_t>(i);
    rec.angles.resize(weights.rows());
    for (std::size_t j = 0; j < weights.rows(); ++j) {
      double cosine =
          dot(activations.row(i), weights.row(j)) / (a_norms[i] * w_norms[j]);
      if (convention == AngleConvention::kAbsolute) {
        cosine = std::clamp(std::abs(cosine), 0.0, 1.0);
      } else {
        cosine = std::clamp(cosine, -1.0, 1.0);
      }
      rec.angles[j] = std::acos(cosine);
    }
  }
  return out;
}

std::vector<LogitRecord> compute_logits(const Matrix& activations,
                                        const Matrix& weights,
                                        std::span<const double> biases,
                                        const Matrix* reference) {
  check_inner_dims(activations, weights);
  if (!biases.empty() && biases.size() != weights.rows()) {
    throw ShapeError("biases length " + std::to_string(biases.size()) +
                     " != class count " + std::to_string(weights.rows()));
  }
  if (reference && (reference->rows() != activations.rows() ||
                    reference->cols() != weights.rows())) {
    throw ShapeError("reference logits shape disagrees with N x K");
  }

  std::vector<LogitRecord> out(activations.rows());
  for (std::size_t i = 0; i < activations.rows(); ++i) {
    auto& rec = out[i];
    rec.sample_id = static_cast<std::int64_t>(i);
    rec.logits.resize(weights.rows());
    for (std::size_t j = 0; j < weights.rows(); ++j) {
      double z = dot(activations.row(i), weights.row(j));
      if (!biases.empty()) z += biases[j];
      if (reference && !(std::abs(z - (*reference)(i, j)) <= kLogitTolerance)) {
        throw ConsistencyError(
            "reconstructed logit (" + std::to_string(i) + ", " +
            std::to_string(j) + ") = " + std::to_string(z) +
            " disagrees with exported " + std::to_string((*reference)(i, j)) +
            "; the export may not hold the decision layer");
      }
      rec.logits[j] = z;
    }
  }
  return out;
}

std::vector<AngleRecord> angles_from_bundle(const TensorBundle& bundle,
                                            AngleConvention convention) {
  auto records =
      compute_angles(bundle.activations(), bundle.weights(), convention);
  const auto labels = bundle.labels();
  const auto ids = bundle.sample_ids();
  label_records(records, std::span<const int>(labels),
                std::span<const std::int64_t>(ids));
  return records;
}

std::vector<LogitRecord> logits_from_bundle(const TensorBundle& bundle) {
  const auto biases = bundle.biases();
  const auto reference = bundle.logits();
  auto records = compute_logits(
      bundle.activations(), bundle.weights(),
      biases ? std::span<const double>(*biases) : std::span<const double>(),
      reference ? &*reference : nullptr);
  const auto labels = bundle.labels();
  const auto ids = bundle.sample_ids();
  label_records(records, std::span<const int>(labels),
                std::span<const std::int64_t>(ids));
  return records;
}

}  // namespace bacon
