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


// Command-line front end: one subcommand per pipeline stage.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bacon/baselines.h"
#include "bacon/bundle_io.h"
#include "bacon/csv_io.h"
#include "bacon/distributions.h"
#include "bacon/errors.h"
#include "bacon/geometry.h"
#include "bacon/harness.h"
#include "bacon/metrics.h"
#include "bacon/posterior.h"
#include "bacon/report.h"
#include "bacon/serialization.h"

namespace fs = std::filesystem;
using namespace bacon;

namespace {

// "auto" or a number.
std::optional<double> parse_auto(const std::string& text, const char* what) {
  if (text == "auto") return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(std::string(what) + " must be 'auto' or a number, got '" +
                      text + "'");
  }
}

Denominator parse_denominator(const std::string& text) {
  if (text == "own-node") return Denominator::kOwnNode;
  if (text == "per-node-mixture") return Denominator::kPerNodeMixture;
  throw ConfigError("denominator must be own-node or per-node-mixture");
}

std::vector<std::int64_t> ids_of(const std::vector<AngleRecord>& records) {
  std::vector<std::int64_t> ids;
  ids.reserve(records.size());
  for (const auto& r : records) ids.push_back(r.sample_id);
  return ids;
}

void cmd_angles(const fs::path& bundle_dir, const fs::path& out,
                bool signed_angles) {
  const TensorBundle bundle = read_bundle(bundle_dir);
  const auto records = angles_from_bundle(
      bundle, signed_angles ? AngleConvention::kSigned
                            : AngleConvention::kAbsolute);
  write_text_file(out, angles_to_csv(records));
}

void cmd_fit(const fs::path& angles_csv, const fs::path& out,
             const std::string& family) {
  const auto records = angles_from_csv(read_text_file(angles_csv));
  std::size_t k = records.empty() ? 0 : records.front().angles.size();
  TableOptions options;
  if (family != "auto") options.family = parse_family(family);
  const LikelihoodTable table = build_likelihood_table(records, k, options);
  write_text_file(out, table_to_json(table));
}

void cmd_bacon(const fs::path& angles_csv, const fs::path& table_json,
               const std::string& weights_arg, const std::string& delta_arg,
               const std::optional<fs::path>& holdout_csv,
               const std::string& denominator, const fs::path& out) {
  const auto records = angles_from_csv(read_text_file(angles_csv));
  LikelihoodTable table = table_from_json(read_text_file(table_json));
  const std::size_t k = table.num_classes();
  const ClassWeights weights =
      weights_arg == "uniform"
          ? ClassWeights::uniform(k)
          : class_weights_from_json(read_text_file(weights_arg), k);
  BaconOptions options;
  options.denominator = parse_denominator(denominator);

  if (const auto delta = parse_auto(delta_arg, "--delta")) {
    table.set_delta(*delta);
  } else {
    if (!holdout_csv) {
      throw ConfigError("--delta auto needs --holdout <angles csv>");
    }
    const auto holdout = angles_from_csv(read_text_file(*holdout_csv));
    const auto cal = calibrate_delta(table, weights, holdout, 0, options);
    std::cerr << "delta " << format_double(cal.delta) << "\n";
  }
  const BaconResult result =
      bacon_confidences(records, table, weights, options);
  if (!result.fallback_rows.empty()) {
    std::cerr << "warning: " << result.fallback_rows.size()
              << " rows fell back to the class weights\n";
  }
  write_text_file(out, confidences_to_csv(result.confidences, ids_of(records)));
}

void cmd_softmax(const fs::path& bundle_dir, const std::string& temperature,
                 const std::optional<fs::path>& holdout_dir,
                 const fs::path& out) {
  const TensorBundle bundle = read_bundle(bundle_dir);
  const auto logits = logits_from_bundle(bundle);
  double beta = 1.0;
  std::optional<EstimatorTag> tag;
  if (const auto t = parse_auto(temperature, "--temperature")) {
    if (!(*t > 0.0)) throw ConfigError("--temperature must be positive");
    beta = 1.0 / *t;
  } else {
    if (!holdout_dir) {
      throw ConfigError("--temperature auto needs --holdout <bundle dir>");
    }
    const auto holdout = logits_from_bundle(read_bundle(*holdout_dir));
    beta = fit_temperature(holdout).beta;
    tag = EstimatorTag::kTScaledSoftmax;
    std::cerr << "temperature " << format_double(1.0 / beta) << "\n";
  }
  const ConfidenceMatrix cm =
      tag ? softmax(logits, beta, *tag) : softmax(logits, beta);
  write_text_file(out, confidences_to_csv(cm, bundle.sample_ids()));
}

void cmd_evaluate(const fs::path& confidences_csv, std::size_t bins,
                  std::size_t ranges, double threshold,
                  const std::string& estimator, const fs::path& out) {
  const auto loaded = confidences_from_csv(read_text_file(confidences_csv),
                                           parse_estimator(estimator));
  MetricOptions options;
  options.num_bins = bins;
  options.num_ranges = ranges;
  options.threshold = threshold;
  write_text_file(out, report_to_json(evaluate(loaded.confidences, options)));
}

void cmd_experiment(const fs::path& config_path) {
  const ExperimentConfig config = experiment_config_from_json(
      read_text_file(config_path), config_path.parent_path());
  const auto runs = run_experiment(config);
  for (const auto& run : runs) {
    if (!run.ok) {
      std::cerr << "seed " << run.seed << " failed: " << run.error << "\n";
    }
  }
  const AggregateResult result = aggregate(runs);
  write_experiment_outputs(runs, result, config.output_dir);
  std::cout << content_hash(aggregate_to_json(result)) << "\n";
}

// A file holds either one CalibrationReport or a whole SeedRun; for the
// latter `estimator` picks one report, or all of them when empty.
void load_reports(const fs::path& path, const std::string& estimator,
                  std::vector<CalibrationReport>& into) {
  const std::string text = read_text_file(path);
  try {
    into.push_back(report_from_json(text));
    return;
  } catch (const FormatError&) {
  }
  const SeedRun run = seed_run_from_json(text);
  if (!estimator.empty()) {
    const auto it = run.reports.find(parse_estimator(estimator));
    if (it == run.reports.end()) {
      throw ConfigError(path.string() + " has no '" + estimator + "' report");
    }
    into.push_back(it->second);
    return;
  }
  for (const auto& [tag, report] : run.reports) into.push_back(report);
}

void cmd_plot(const std::vector<fs::path>& reports, const std::string& kind_arg,
              const std::string& title, const std::string& estimator,
              std::optional<int> class_filter, const fs::path& out) {
  const PlotKind kind = parse_plot_kind(kind_arg);
  Rendered plot;
  if (kind == PlotKind::kCIWhisker || kind == PlotKind::kMceScatter) {
    if (reports.size() != 1) {
      throw ConfigError("this plot takes exactly one aggregate.json");
    }
    const AggregateResult result =
        aggregate_from_json(read_text_file(reports.front()));
    if (kind == PlotKind::kCIWhisker) {
      plot = render_ci_whisker(result, title);
    } else {
      const auto points = mce_points(result);
      plot = render_mce_scatter(points, title);
    }
  } else {
    std::vector<CalibrationReport> loaded;
    for (const auto& path : reports) load_reports(path, estimator, loaded);
    if (kind == PlotKind::kClassScatter) {
      plot = render_class_scatter(loaded, title);
    } else if (loaded.size() != 1) {
      throw ConfigError(
          "reliability diagrams take exactly one report; pass --estimator "
          "for a seed run");
    } else if (kind == PlotKind::kFixedReliability) {
      plot = render_fixed_reliability(loaded.front(), title);
    } else {
      plot = render_adaptive_reliability(loaded.front(), title, class_filter);
    }
  }
  write_plot(plot, out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BACON confidence calibration toolkit"};
  app.require_subcommand(1);

  std::string bundle, out, angles, table, weights = "uniform", delta = "auto",
                                             denominator = "own-node",
                                             temperature = "1", family = "auto",
                                             estimator = "bacon", config,
                                             kind, title;
  std::string holdout, plot_estimator;
  std::vector<std::string> reports;
  std::size_t bins = 0, ranges = 0;
  double threshold = kDefaultAceThreshold;
  std::optional<int> class_filter;
  bool signed_angles = false;

  auto* angles_cmd = app.add_subcommand("angles", "decision-vector angles");
  angles_cmd->add_option("--bundle", bundle)->required();
  angles_cmd->add_option("--out", out)->required();
  angles_cmd->add_flag("--signed", signed_angles,
                       "signed cosines instead of absolute values");

  auto* fit_cmd = app.add_subcommand("fit", "fit the likelihood table");
  fit_cmd->add_option("--angles", angles)->required();
  fit_cmd->add_option("--out", out)->required();
  fit_cmd->add_option("--family", family, "auto|normal|lognormal|cauchy");

  auto* bacon_cmd = app.add_subcommand("bacon", "BACON confidences");
  bacon_cmd->add_option("--angles", angles)->required();
  bacon_cmd->add_option("--table", table)->required();
  bacon_cmd->add_option("--weights", weights, "uniform or a JSON file");
  bacon_cmd->add_option("--delta", delta, "auto or radians");
  bacon_cmd->add_option("--holdout", holdout, "angles CSV for --delta auto");
  bacon_cmd->add_option("--denominator", denominator,
                        "own-node|per-node-mixture");
  bacon_cmd->add_option("--out", out)->required();

  auto* softmax_cmd = app.add_subcommand("softmax", "softmax confidences");
  softmax_cmd->add_option("--bundle", bundle)->required();
  softmax_cmd->add_option("--temperature", temperature, "auto or T > 0");
  softmax_cmd->add_option("--holdout", holdout,
                          "bundle dir for --temperature auto");
  softmax_cmd->add_option("--out", out)->required();

  auto* eval_cmd = app.add_subcommand("evaluate", "calibration report");
  eval_cmd->add_option("--confidences", angles)->required();
  eval_cmd->add_option("--M", bins, "fixed bins, 0 means K-1");
  eval_cmd->add_option("--R", ranges, "adaptive ranges, 0 means K-1");
  eval_cmd->add_option("--threshold", threshold);
  eval_cmd->add_option("--estimator", estimator);
  eval_cmd->add_option("--out", out)->required();

  auto* exp_cmd = app.add_subcommand("experiment", "multi-seed experiment");
  exp_cmd->add_option("--config", config)->required();

  auto* plot_cmd = app.add_subcommand("plot", "SVG plot plus CSV");
  plot_cmd->add_option("--report", reports)->required();
  plot_cmd->add_option("--kind", kind)->required();
  plot_cmd->add_option("--title", title);
  plot_cmd->add_option("--class", class_filter);
  plot_cmd->add_option("--estimator", plot_estimator,
                       "report to take from a per-seed report.json");
  plot_cmd->add_option("--out", out)->required();

  CLI11_PARSE(app, argc, argv);

  const auto opt_path = [](const std::string& s) -> std::optional<fs::path> {
    if (s.empty()) return std::nullopt;
    return fs::path(s);
  };
  try {
    if (*angles_cmd) {
      cmd_angles(bundle, out, signed_angles);
    } else if (*fit_cmd) {
      cmd_fit(angles, out, family);
    } else if (*bacon_cmd) {
      cmd_bacon(angles, table, weights, delta, opt_path(holdout), denominator,
                out);
    } else if (*softmax_cmd) {
      cmd_softmax(bundle, temperature, opt_path(holdout), out);
    } else if (*eval_cmd) {
      cmd_evaluate(angles, bins, ranges, threshold, estimator, out);
    } else if (*exp_cmd) {
      cmd_experiment(config);
    } else if (*plot_cmd) {
      std::vector<fs::path> paths(reports.begin(), reports.end());
      cmd_plot(paths, kind, title.empty() ? kind : title, plot_estimator,
               class_filter, out);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
