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

#ifndef BACON_DISTRIBUTIONS_H_
#define BACON_DISTRIBUTIONS_H_

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bacon/geometry.h"

namespace bacon {

enum class Family { kNormal, kLogNormal, kCauchy };

inline constexpr std::array<Family, 3> kAllFamilies = {
    Family::kNormal, Family::kLogNormal, Family::kCauchy};

std::string_view family_name(Family family);
// Throws ConfigError on an unknown name.
Family parse_family(std::string_view name);

// Fitted angle likelihood for one (output node, label class) cell.
//
// params: Normal {mean, std}; LogNormal {log-mean, log-std};
//         Cauchy {location, scale}. Scale parameters are strictly positive.
struct LikelihoodModel {
  Family family = Family::kNormal;
  std::array<double, 2> params = {0.0, 1.0};
  int node = -1;
  int label_class = -1;
  std::size_t n_samples = 0;
  double log_likelihood = 0.0;
  // Fitted on the pooled off-diagonal angles of `node` because the cell
  // itself was too sparse.
  bool pooled = false;
  // Log-likelihood deficit of each losing family, keyed by family name.
  std::map<std::string, double> runner_up;

  double location() const { return params[0]; }
  double scale() const { return params[1]; }

  double pdf(double x) const;
  double log_pdf(double x) const;
  double cdf(double x) const;
  // Survival function 1 - cdf, evaluated without cancellation.
  double sf(double x) const;
  double median() const;
  // Lower edge of the support (0 for LogNormal, -inf otherwise).
  double support_min() const;
};

// Throws ConfigError unless the scale parameter is strictly positive and
// both parameters are finite.
LikelihoodModel make_model(Family family, double location, double scale);

inline constexpr std::size_t kMinFitSize = 30;

// Maximum-likelihood fit. Normal and LogNormal use the closed-form moment
// estimators of the (log-)data. Cauchy uses alternating Newton steps from
// (median, half-IQR) with a grid search fallback.
//
// Throws InsufficientDataError (too few samples or zero spread) and
// DomainError (non-finite sample, or non-positive sample under LogNormal).
LikelihoodModel fit(std::span<const double> samples, Family family);

// Fits every family and keeps the one with the largest total log-likelihood.
// Throws InsufficientDataError below kMinFitSize and NoModelError when no
// family can be fitted.
LikelihoodModel select_family(std::span<const double> samples);

// Mass of [phi - delta, phi + delta] (lower limit floored at the support
// edge) computed by CDF differencing. Throws ConfigError unless delta > 0.
double interval_probability(const LikelihoodModel& model, double phi,
                            double delta);
// Natural log of interval_probability. Where the difference underflows the
// log is approximated from the density at the interval end nearest the mode;
// -inf only when the interval lies outside the support.
double log_interval_probability(const LikelihoodModel& model, double phi,
                                double delta);

double draw(const LikelihoodModel& model, std::mt19937_64& rng);

// K x K grid of likelihood models indexed by (output node, label class).
class LikelihoodTable {
 public:
  LikelihoodTable() = default;
  // Throws ConfigError when a diagonal cell is absent or delta <= 0.
  LikelihoodTable(std::size_t num_classes,
                  std::vector<std::optional<LikelihoodModel>> cells,
                  std::optional<double> delta = std::nullopt);

  std::size_t num_classes() const { return k_; }
  const LikelihoodModel& diagonal(std::size_t j) const;
  // nullptr when the cell could not be fitted.
  const LikelihoodModel* cell(std::size_t node, std::size_t label_class) const;

  std::optional<double> delta() const { return delta_; }
  // Throws CalibrationError when no delta has been set.
  double require_delta() const;
  void set_delta(double delta);

  std::map<std::string, std::string> metadata;

 private:
  std::size_t k_ = 0;
  std::vector<std::optional<LikelihoodModel>> cells_;
  std::optional<double> delta_;
};

struct TableOptions {
  // Fit this family everywhere instead of selecting by log-likelihood.
  std::optional<Family> family;
};

// Fits every (node, label class) cell from validation angles. Sparse
// off-diagonal cells fall back to the pooled off-diagonal angles of their
// node; diagonal cells must fit or the error propagates.
LikelihoodTable build_likelihood_table(std::span<const AngleRecord> records,
                                       std::size_t num_classes,
                                       const TableOptions& options = {});

}  // namespace bacon

#endif  // BACON_DISTRIBUTIONS_H_
