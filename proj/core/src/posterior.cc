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

#include "bacon/posterior.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bacon/errors.h"
#include "bacon/metrics.h"

namespace bacon {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_weight(double w) { return w > 0.0 ? std::log(w) : kNegInf; }

double log_sum_exp(std::span<const double> xs) {
  const double m = *std::max_element(xs.begin(), xs.end());
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

ClassWeights::ClassWeights(std::vector<double> values)
    : values_(std::move(values)) {
  bool any_positive = false;
  for (double w : values_) {
    if (!std::isfinite(w) || w < 0.0) {
      throw ConfigError("class weights must be finite and nonnegative");
    }
    any_positive = any_positive || w > 0.0;
  }
  if (!any_positive) throw ConfigError("at least one class weight must be > 0");
}

ClassWeights ClassWeights::uniform(std::size_t num_classes) {
  return ClassWeights(std::vector<double>(num_classes, 1.0));
}

bool ClassWeights::is_uniform() const {
  return std::all_of(values_.begin(), values_.end(),
                     [&](double w) { return w == values_.front(); });
}

BaconResult bacon_confidences_at(std::span<const AngleRecord> angles,
                                 const LikelihoodTable& table,
                                 const ClassWeights& weights, double delta,
                                 const BaconOptions& options) {
  const std::size_t k = table.num_classes();
  if (weights.size() != k) {
    throw ShapeError("class weight count " + std::to_string(weights.size()) +
                     " != K " + std::to_string(k));
  }
  if (!(delta > 0.0)) throw ConfigError("delta must be positive");

  // Equal weights cancel; leaving them out keeps the reduction bit-exact.
  std::vector<double> log_w(k, 0.0);
  if (!weights.is_uniform()) {
    for (std::size_t j = 0; j < k; ++j) log_w[j] = log_weight(weights[j]);
  }

  Matrix probs(angles.size(), k);
  std::vector<int> labels(angles.size());
  std::vector<std::size_t> fallback;
  std::vector<double> log_num(k);
  std::vector<double> terms;
  terms.reserve(k);

  for (std::size_t n = 0; n < angles.size(); ++n) {
    const auto& rec = angles[n];
    if (rec.angles.size() != k) {
      throw ShapeError("angle record " + std::to_string(rec.sample_id) +
                       " has " + std::to_string(rec.angles.size()) +
                       " angles, expected " + std::to_string(k));
    }
    labels[n] = rec.label;

    for (std::size_t j = 0; j < k; ++j) {
      log_num[j] = log_w[j] + log_interval_probability(table.diagonal(j),
                                                       rec.angles[j], delta);
    }
    if (options.denominator == Denominator::kPerNodeMixture) {
      for (std::size_t j = 0; j < k; ++j) {
        terms.clear();
        for (std::size_t i = 0; i < k; ++i) {
          const LikelihoodModel* m = table.cell(j, i);
          if (!m) continue;
          terms.push_back(log_w[i] +
                          log_interval_probability(*m, rec.angles[j], delta));
        }
        const double log_den = log_sum_exp(terms);
        log_num[j] = log_den == kNegInf ? kNegInf : log_num[j] - log_den;
      }
    }

    auto row = probs.row(n);
    const double top = *std::max_element(log_num.begin(), log_num.end());
    if (top == kNegInf) {
      fallback.push_back(n);
      double total = 0.0;
      for (std::size_t j = 0; j < k; ++j) total += weights[j];
      for (std::size_t j = 0; j < k; ++j) row[j] = weights[j] / total;
      continue;
    }
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      row[j] = std::exp(log_num[j] - top);
      total += row[j];
    }
    for (std::size_t j = 0; j < k; ++j) row[j] = std::min(row[j] / total, 1.0);
  }

  const EstimatorTag tag =
      options.tag.value_or(weights.is_uniform() ? EstimatorTag::kBacon
                                                : EstimatorTag::kBaconWeighted);
  return {ConfidenceMatrix(std::move(probs), std::move(labels), tag),
          std::move(fallback)};
}

BaconResult bacon_confidences(std::span<const AngleRecord> angles,
                              const LikelihoodTable& table,
                              const ClassWeights& weights,
                              const BaconOptions& options) {
  return bacon_confidences_at(angles, table, weights, table.require_delta(),
                              options);
}

std::vector<double> delta_grid() {
  std::vector<double> grid(kDeltaGridSize);
  const double lo = std::log(kDeltaGridMin);
  const double hi = std::log(kDeltaGridMax);
  for (std::size_t i = 0; i < kDeltaGridSize; ++i) {
    grid[i] = std::exp(lo + (hi - lo) * static_cast<double>(i) /
                                static_cast<double>(kDeltaGridSize - 1));
  }
  grid.front() = kDeltaGridMin;
  grid.back() = kDeltaGridMax;
  return grid;
}

DeltaCalibration calibrate_delta(LikelihoodTable& table,
                                 const ClassWeights& weights,
                                 std::span<const AngleRecord> holdout,
                                 std::size_t bins,
                                 const BaconOptions& options) {
  if (holdout.empty()) throw CalibrationError("hold-out set is empty");
  if (bins == 0) bins = table.num_classes() - 1;

  DeltaCalibration out;
  out.grid = delta_grid();
  out.holdout_ece.reserve(out.grid.size());
  std::size_t best = 0;
  for (std::size_t i = 0; i < out.grid.size(); ++i) {
    const auto result =
        bacon_confidences_at(holdout, table, weights, out.grid[i], options);
    out.holdout_ece.push_back(ece(result.confidences, bins).ece);
    if (out.holdout_ece[i] < out.holdout_ece[best]) best = i;
  }
  out.delta = out.grid[best];
  table.set_delta(out.delta);
  return out;
}

}  // namespace bacon
