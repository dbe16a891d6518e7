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

#ifndef BACON_METRICS_H_
#define BACON_METRICS_H_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "bacon/confidence.h"

namespace bacon {

// Uniform-width bins on [0, 1]. Bin m covers [edges[m], edges[m+1]) and the
// last bin is closed at 1. Empty bins have no confidence or accuracy.
struct FixedBinning {
  std::size_t num_bins = 0;
  std::size_t n = 0;
  std::vector<double> edges;
  std::vector<std::size_t> counts;
  std::vector<std::optional<double>> confidence;
  std::vector<std::optional<double>> accuracy;

  std::optional<double> gap(std::size_t m) const;
};

// Bins predicted-class confidences with their correctness flags.
FixedBinning bin_predictions(std::span<const double> confidences,
                             std::span<const bool> correct,
                             std::size_t num_bins);
std::size_t bin_index(double confidence, std::size_t num_bins);

struct EceResult {
  double ece = 0.0;
  FixedBinning binning;
};

// Expected calibration error over the predicted class of every sample.
EceResult ece(const ConfidenceMatrix& confidences, std::size_t num_bins);
double ece(const FixedBinning& binning);

struct MceResult {
  double mce = 0.0;
  std::size_t bin_frequency = 0;
  std::size_t bin = 0;
};

// Largest |acc - conf| over nonempty bins, with the frequency of the bin it
// came from. Throws MetricError when every bin is empty.
MceResult mce(const FixedBinning& binning);

struct AdaptiveRange {
  std::size_t count = 0;
  double confidence = 0.0;
  double accuracy = 0.0;
};

// Constant-frequency ranges per class over every class confidence at or
// above `threshold`.
struct AdaptiveBinning {
  std::size_t num_ranges = 0;
  double threshold = 0.0;
  // ranges[k][r]
  std::vector<std::vector<AdaptiveRange>> ranges;
  // Number of confidences per class that survived the threshold.
  std::vector<std::size_t> class_counts;
  // Classes with no surviving confidence; they contribute zero.
  std::vector<int> empty_classes;

  // (1/R) sum_r |acc(r,k) - conf(r,k)|.
  double class_error(std::size_t k) const;
};

// Sizes of R contiguous ranges over n sorted items; sizes differ by at most
// one and the lowest ranges take the remainder.
std::vector<std::size_t> constant_frequency_sizes(std::size_t n,
                                                  std::size_t num_ranges);

struct AceResult {
  double ace = 0.0;
  AdaptiveBinning binning;
};

AceResult ace(const ConfidenceMatrix& confidences, std::size_t num_ranges,
              double threshold);

// counts[true][predicted].
using ConfusionMatrix = std::vector<std::vector<std::size_t>>;
ConfusionMatrix confusion_matrix(const ConfidenceMatrix& confidences);

struct ClassMetrics {
  int class_index = 0;
  std::size_t support = 0;
  // Recall of the class.
  double accuracy = 0.0;
  // ECE over the samples whose true label is this class.
  double ece = 0.0;
  double ace = 0.0;
};

struct PerClassReport {
  std::vector<ClassMetrics> classes;
  // Classes with no samples.
  std::vector<int> omitted;
};

PerClassReport per_class_report(const ConfidenceMatrix& confidences,
                                std::size_t num_bins, std::size_t num_ranges,
                                double threshold);

inline constexpr double kDefaultAceThreshold = 0.001;

struct MetricOptions {
  // Zero selects K - 1.
  std::size_t num_bins = 0;
  std::size_t num_ranges = 0;
  double threshold = kDefaultAceThreshold;
};

struct CalibrationReport {
  EstimatorTag estimator = EstimatorTag::kSoftmax;
  std::size_t n = 0;
  std::size_t num_classes = 0;
  double ece = 0.0;
  double mce = 0.0;
  std::size_t mce_bin_frequency = 0;
  double ace = 0.0;
  double accuracy = 0.0;
  FixedBinning fixed;
  AdaptiveBinning adaptive;
  PerClassReport per_class;
  ConfusionMatrix confusion;
};

// Full report. Throws MetricError on an empty confidence matrix.
CalibrationReport evaluate(const ConfidenceMatrix& confidences,
                           const MetricOptions& options = {});

}  // namespace bacon

#endif  // BACON_METRICS_H_
