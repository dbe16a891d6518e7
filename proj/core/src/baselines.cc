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

#include "bacon/baselines.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "bacon/errors.h"

namespace bacon {
namespace {

// 1 / golden ratio.
constexpr double kInvPhi = 0.6180339887498948482;
constexpr double kFlatTolerance = 1e-12;

void check_record(const LogitRecord& r, std::size_t k) {
  if (r.logits.size() != k) {
    throw ShapeError("logit record " + std::to_string(r.sample_id) + " has " +
                     std::to_string(r.logits.size()) + " logits, expected " +
                     std::to_string(k));
  }
  for (double x : r.logits) {
    if (!std::isfinite(x)) throw ValidationError("non-finite logit");
  }
}

}  // namespace

ConfidenceMatrix softmax(std::span<const LogitRecord> logits, double beta) {
  return softmax(logits, beta,
                 beta == 1.0 ? EstimatorTag::kSoftmax
                             : EstimatorTag::kTScaledSoftmax);
}

ConfidenceMatrix softmax(std::span<const LogitRecord> logits, double beta,
                         EstimatorTag tag) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw ConfigError("beta must be positive and finite");
  }
  const std::size_t k = logits.empty() ? 2 : logits.front().logits.size();
  Matrix probs(logits.size(), k);
  std::vector<int> labels(logits.size());
  for (std::size_t n = 0; n < logits.size(); ++n) {
    const auto& rec = logits[n];
    check_record(rec, k);
    labels[n] = rec.label;
    const double top = *std::max_element(rec.logits.begin(), rec.logits.end());
    auto row = probs.row(n);
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      row[j] = std::exp(beta * (rec.logits[j] - top));
      total += row[j];
    }
    for (double& p : row) p /= total;
  }
  return ConfidenceMatrix(std::move(probs), std::move(labels), tag);
}

double mean_nll(std::span<const LogitRecord> logits, double beta) {
  if (logits.empty()) throw CalibrationError("NLL of an empty set");
  double total = 0.0;
  for (const auto& rec : logits) {
    const double top = *std::max_element(rec.logits.begin(), rec.logits.end());
    double s = 0.0;
    for (double x : rec.logits) s += std::exp(beta * (x - top));
    const auto y = static_cast<std::size_t>(rec.label);
    total += std::log(s) - beta * (rec.logits.at(y) - top);
  }
  return total / static_cast<double>(logits.size());
}

std::vector<double> beta_grid() {
  std::vector<double> grid(kBetaGridSize);
  const double lo = std::log(kBetaGridMin);
  const double hi = std::log(kBetaGridMax);
  for (std::size_t i = 0; i < kBetaGridSize; ++i) {
    grid[i] = std::exp(lo + (hi - lo) * static_cast<double>(i) /
                                static_cast<double>(kBetaGridSize - 1));
  }
  grid.front() = kBetaGridMin;
  grid.back() = kBetaGridMax;
  return grid;
}

TemperatureParam fit_temperature(std::span<const LogitRecord> holdout) {
  if (holdout.empty()) throw CalibrationError("hold-out set is empty");
  const std::size_t k = holdout.front().logits.size();
  for (const auto& r : holdout) {
    check_record(r, k);
    if (r.label < 0 || static_cast<std::size_t>(r.label) >= k) {
      throw ValidationError("hold-out label out of range");
    }
  }

  const auto grid = beta_grid();
  std::vector<double> nll(grid.size());
  std::size_t best = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    nll[i] = mean_nll(holdout, grid[i]);
    if (nll[i] < nll[best]) best = i;
  }
  const auto [lo_it, hi_it] = std::minmax_element(nll.begin(), nll.end());
  if (*hi_it - *lo_it <= kFlatTolerance) return {grid.front(), nll.front()};

  double a = grid[best == 0 ? 0 : best - 1];
  double b = grid[std::min(best + 1, grid.size() - 1)];
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = mean_nll(holdout, c);
  double fd = mean_nll(holdout, d);
  while (b - a > kBetaTolerance) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = mean_nll(holdout, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = mean_nll(holdout, d);
    }
  }

  TemperatureParam out{grid[best], nll[best]};
  const double refined = 0.5 * (a + b);
  const double refined_nll = mean_nll(holdout, refined);
  if (refined_nll < out.nll_holdout) out = {refined, refined_nll};
  const double unit_nll = mean_nll(holdout, 1.0);
  if (unit_nll < out.nll_holdout) out = {1.0, unit_nll};
  return out;
}

}  // namespace bacon
