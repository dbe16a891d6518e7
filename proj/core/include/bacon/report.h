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

#ifndef BACON_REPORT_H_
#define BACON_REPORT_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bacon/harness.h"
#include "bacon/metrics.h"

namespace bacon {

enum class PlotKind {
  kFixedReliability,
  kAdaptiveReliability,
  kCIWhisker,
  kClassScatter,
  kMceScatter,
};

std::string_view plot_kind_name(PlotKind kind);
// Throws ConfigError on an unknown name.
PlotKind parse_plot_kind(std::string_view name);

// An SVG document and the CSV holding every plotted value. Each plotted
// element carries its values as data-* attributes spelled exactly as in the
// CSV, and no other numbers are printed as text.
struct Rendered {
  std::string svg;
  std::string csv;
};

// Upper panel: per-bin accuracy bars and mean-confidence markers against the
// identity line. Lower panel: bin frequency histogram. Empty bins draw
// nothing. Axes are fixed to [0, 1].
Rendered render_fixed_reliability(const CalibrationReport& report,
                                  std::string_view title);

// (confidence, accuracy) scatter of every adaptive range, one series per
// class, against the identity line.
Rendered render_adaptive_reliability(const CalibrationReport& report,
                                     std::string_view title,
                                     std::optional<int> class_filter = {});

// Mean +/- 2 sigma whiskers for each estimator and metric.
Rendered render_ci_whisker(const AggregateResult& result,
                           std::string_view title);

// Per-class calibration error against class accuracy, one series per
// report.
Rendered render_class_scatter(std::span<const CalibrationReport> reports,
                              std::string_view title);

struct McePoint {
  std::uint64_t seed = 0;
  EstimatorTag estimator = EstimatorTag::kSoftmax;
  std::size_t bin_frequency = 0;
  double mce = 0.0;
};

std::vector<McePoint> mce_points(std::span<const SeedRun> runs);
std::vector<McePoint> mce_points(const AggregateResult& result);

// MCE against the frequency of the bin that produced it.
Rendered render_mce_scatter(std::span<const McePoint> points,
                            std::string_view title);

// Writes `svg_path` and the CSV beside it with the same basename.
void write_plot(const Rendered& plot, const std::filesystem::path& svg_path);

}  // namespace bacon

#endif  // BACON_REPORT_H_
