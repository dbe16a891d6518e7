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

#include "bacon/metrics.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>

#include "bacon/errors.h"

namespace bacon {
namespace {

double edge(std::size_t m, std::size_t num_bins) {
  return static_cast<double>(m) / static_cast<double>(num_bins);
}

}  // namespace

std::optional<double> FixedBinning::gap(std::size_t m) const {
  if (counts[m] == 0) return std::nullopt;
  return std::abs(*accuracy[m] - *confidence[m]);
}

std::size_t bin_index(double confidence, std::size_t num_bins) {
  const double scaled = confidence * static_cast<double>(num_bins);
  std::size_t m = scaled <= 0.0 ? 0 : static_cast<std::size_t>(scaled);
  m = std::min(m, num_bins - 1);
  while (m > 0 && confidence < edge(m, num_bins)) --m;
  while (m + 1 < num_bins && confidence >= edge(m + 1, num_bins)) ++m;
  return m;
}

FixedBinning bin_predictions(std::span<const double> confidences,
                             std::span<const bool> correct,
                             std::size_t num_bins) {
  if (num_bins == 0) throw MetricError("bin count must be >= 1");
  if (confidences.size() != correct.size()) {
    throw MetricError("confidence and correctness lengths differ");
  }
  FixedBinning b;
  b.num_bins = num_bins;
  b.n = confidences.size();
  b.edges.resize(num_bins + 1);
  for (std::size_t m = 0; m <= num_bins; ++m) b.edges[m] = edge(m, num_bins);
  b.counts.assign(num_bins, 0);
  std::vector<double> conf_sum(num_bins, 0.0);
  std::vector<std::size_t> hits(num_bins, 0);
  for (std::size_t i = 0; i < confidences.size(); ++i) {
    const std::size_t m = bin_index(confidences[i], num_bins);
    ++b.counts[m];
    conf_sum[m] += confidences[i];
    hits[m] += correct[i] ? 1 : 0;
  }
  b.confidence.resize(num_bins);
  b.accuracy.resize(num_bins);
  for (std::size_t m = 0; m < num_bins; ++m) {
    if (b.counts[m] == 0) continue;
    const auto count = static_cast<double>(b.counts[m]);
    b.confidence[m] = conf_sum[m] / count;
    b.accuracy[m] = static_cast<double>(hits[m]) / count;
  }
  return b;
}

double ece(const FixedBinning& binning) {
  if (binning.n == 0) return 0.0;
  double total = 0.0;
  for (std::size_t m = 0; m < binning.num_bins; ++m) {
    if (const auto g = binning.gap(m)) {
      total += static_cast<double>(binning.counts[m]) /
               static_cast<double>(binning.n) * *g;
    }
  }
  return total;
}

EceResult ece(const ConfidenceMatrix& confidences, std::size_t num_bins) {
  const std::size_t n = confidences.num_samples();
  std::vector<double> conf(n);
  // std::vector<bool> is not contiguous, so hold flags in a plain array.
  auto correct = std::make_unique<bool[]>(n);
  for (std::size_t i = 0; i < n; ++i) {
    conf[i] = confidences.max_confidence(i);
    correct[i] = confidences.correct(i);
  }
  EceResult out;
  out.binning = bin_predictions(conf, std::span<const bool>(correct.get(), n),
                                num_bins);
  out.ece = ece(out.binning);
  return out;
}

MceResult mce(const FixedBinning& binning) {
  MceResult out;
  bool any = false;
  for (std::size_t m = 0; m < binning.num_bins; ++m) {
    const auto g = binning.gap(m);
    if (!g) continue;
    if (!any || *g > out.mce) {
      out = {*g, binning.counts[m], m};
      any = true;
    }
  }
  if (!any) throw MetricError("MCE undefined: every bin is empty");
  return out;
}

double AdaptiveBinning::class_error(std::size_t k) const {
  double total = 0.0;
  for (const auto& r : ranges[k]) {
    if (r.count > 0) total += std::abs(r.accuracy - r.confidence);
  }
  return total / static_cast<double>(num_ranges);
}

std::vector<std::size_t> constant_frequency_sizes(std::size_t n,
                                                  std::size_t num_ranges) {
  if (num_ranges == 0) throw MetricError("range count must be >= 1");
  std::vector<std::size_t> sizes(num_ranges, n / num_ranges);
  for (std::size_t r = 0; r < n % num_ranges; ++r) ++sizes[r];
  return sizes;
}

AceResult ace(const ConfidenceMatrix& confidences, std::size_t num_ranges,
              double threshold) {
  if (num_ranges == 0) throw MetricError("range count must be >= 1");
  if (!(threshold >= 0.0 && threshold < 1.0)) {
    throw MetricError("ACE threshold must lie in [0, 1)");
  }
  const std::size_t n = confidences.num_samples();
  const std::size_t k = confidences.num_classes();
  const auto& labels = confidences.labels();

  AceResult out;
  auto& b = out.binning;
  b.num_ranges = num_ranges;
  b.threshold = threshold;
  b.ranges.assign(k, std::vector<AdaptiveRange>(num_ranges));
  b.class_counts.assign(k, 0);

  std::vector<std::size_t> order;
  order.reserve(n);
  double total = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    order.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (confidences.probs()(i, c) >= threshold) order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t bb) {
                       return confidences.probs()(a, c) <
                              confidences.probs()(bb, c);
                     });
    b.class_counts[c] = order.size();
    if (order.empty()) {
      b.empty_classes.push_back(static_cast<int>(c));
      continue;
    }
    const auto sizes = constant_frequency_sizes(order.size(), num_ranges);
    std::size_t pos = 0;
    for (std::size_t r = 0; r < num_ranges; ++r) {
      auto& range = b.ranges[c][r];
      range.count = sizes[r];
      if (sizes[r] == 0) continue;
      double conf_sum = 0.0;
      std::size_t hits = 0;
      for (std::size_t t = 0; t < sizes[r]; ++t, ++pos) {
        const std::size_t i = order[pos];
        conf_sum += confidences.probs()(i, c);
        hits += labels[i] == static_cast<int>(c) ? 1 : 0;
      }
      const auto count = static_cast<double>(sizes[r]);
      range.confidence = conf_sum / count;
      range.accuracy = static_cast<double>(hits) / count;
      total += std::abs(range.accuracy - range.confidence);
    }
  }
  out.ace = total / static_cast<double>(k * num_ranges);
  return out;
}

ConfusionMatrix confusion_matrix(const ConfidenceMatrix& confidences) {
  const std::size_t k = confidences.num_classes();
  ConfusionMatrix counts(k, std::vector<std::size_t>(k, 0));
  for (std::size_t i = 0; i < confidences.num_samples(); ++i) {
    ++counts[static_cast<std::size_t>(confidences.labels()[i])]
            [static_cast<std::size_t>(confidences.predicted(i))];
  }
  return counts;
}

namespace {

PerClassReport per_class_from(const ConfidenceMatrix& confidences,
                              std::size_t num_bins,
                              const AdaptiveBinning& adaptive) {
  const std::size_t k = confidences.num_classes();
  const std::size_t n = confidences.num_samples();
  PerClassReport out;
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<double> conf;
    std::vector<char> hit;
    for (std::size_t i = 0; i < n; ++i) {
      if (confidences.labels()[i] != static_cast<int>(c)) continue;
      conf.push_back(confidences.max_confidence(i));
      hit.push_back(confidences.correct(i) ? 1 : 0);
    }
    if (conf.empty()) {
      out.omitted.push_back(static_cast<int>(c));
      continue;
    }
    auto flags = std::make_unique<bool[]>(hit.size());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < hit.size(); ++i) {
      flags[i] = hit[i] != 0;
      hits += flags[i] ? 1 : 0;
    }
    ClassMetrics m;
    m.class_index = static_cast<int>(c);
    m.support = conf.size();
    m.accuracy = static_cast<double>(hits) / static_cast<double>(conf.size());
    m.ece = ece(bin_predictions(
        conf, std::span<const bool>(flags.get(), hit.size()), num_bins));
    m.ace = adaptive.class_error(c);
    out.classes.push_back(m);
  }
  return out;
}

}  // namespace

PerClassReport per_class_report(const ConfidenceMatrix& confidences,
                                std::size_t num_bins, std::size_t num_ranges,
                                double threshold) {
  const auto adaptive = ace(confidences, num_ranges, threshold).binning;
  return per_class_from(confidences, num_bins, adaptive);
}

CalibrationReport evaluate(const ConfidenceMatrix& confidences,
                           const MetricOptions& options) {
  if (confidences.num_samples() == 0) {
    throw MetricError("cannot evaluate an empty confidence matrix");
  }
  const std::size_t k = confidences.num_classes();
  const std::size_t bins = options.num_bins ? options.num_bins : k - 1;
  const std::size_t ranges = options.num_ranges ? options.num_ranges : k - 1;

  CalibrationReport r;
  r.estimator = confidences.tag();
  r.n = confidences.num_samples();
  r.num_classes = k;

  auto e = ece(confidences, bins);
  r.ece = e.ece;
  r.fixed = std::move(e.binning);
  const auto m = mce(r.fixed);
  r.mce = m.mce;
  r.mce_bin_frequency = m.bin_frequency;

  auto a = ace(confidences, ranges, options.threshold);
  r.ace = a.ace;
  r.adaptive = std::move(a.binning);
  r.per_class = per_class_from(confidences, bins, r.adaptive);
  r.confusion = confusion_matrix(confidences);

  std::size_t hits = 0;
  for (std::size_t i = 0; i < r.n; ++i) hits += confidences.correct(i) ? 1 : 0;
  r.accuracy = static_cast<double>(hits) / static_cast<double>(r.n);
  return r;
}

}  // namespace bacon
