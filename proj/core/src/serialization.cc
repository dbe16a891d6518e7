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

#include "bacon/serialization.h"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <system_error>

#include "bacon/errors.h"
#include "json.hpp"

namespace bacon {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed JSON: ") + e.what());
  }
}

json optional_number(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

std::optional<double> number_or_null(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json fixed_to_json(const FixedBinning& b) {
  json bins = json::array();
  for (std::size_t m = 0; m < b.num_bins; ++m) {
    bins.push_back({{"lo", b.edges[m]},
                    {"hi", b.edges[m + 1]},
                    {"count", b.counts[m]},
                    {"confidence", optional_number(b.confidence[m])},
                    {"accuracy", optional_number(b.accuracy[m])}});
  }
  return {{"num_bins", b.num_bins}, {"n", b.n}, {"bins", bins}};
}

FixedBinning fixed_from_json(const json& j) {
  FixedBinning b;
  b.num_bins = j.at("num_bins").get<std::size_t>();
  b.n = j.at("n").get<std::size_t>();
  const auto& bins = j.at("bins");
  if (bins.size() != b.num_bins) throw FormatError("bin list length mismatch");
  for (const auto& bin : bins) {
    if (b.edges.empty()) b.edges.push_back(bin.at("lo").get<double>());
    b.edges.push_back(bin.at("hi").get<double>());
    b.counts.push_back(bin.at("count").get<std::size_t>());
    b.confidence.push_back(number_or_null(bin.at("confidence")));
    b.accuracy.push_back(number_or_null(bin.at("accuracy")));
  }
  return b;
}

json adaptive_to_json(const AdaptiveBinning& b) {
  json ranges = json::array();
  for (const auto& per_class : b.ranges) {
    json row = json::array();
    for (const auto& r : per_class) {
      row.push_back({{"count", r.count},
                     {"confidence", r.confidence},
                     {"accuracy", r.accuracy}});
    }
    ranges.push_back(std::move(row));
  }
  return {{"num_ranges", b.num_ranges},
          {"threshold", b.threshold},
          {"class_counts", b.class_counts},
          {"empty_classes", b.empty_classes},
          {"ranges", ranges}};
}

AdaptiveBinning adaptive_from_json(const json& j) {
  AdaptiveBinning b;
  b.num_ranges = j.at("num_ranges").get<std::size_t>();
  b.threshold = j.at("threshold").get<double>();
  b.class_counts = j.at("class_counts").get<std::vector<std::size_t>>();
  b.empty_classes = j.at("empty_classes").get<std::vector<int>>();
  for (const auto& row : j.at("ranges")) {
    std::vector<AdaptiveRange> per_class;
    for (const auto& r : row) {
      per_class.push_back({r.at("count").get<std::size_t>(),
                           r.at("confidence").get<double>(),
                           r.at("accuracy").get<double>()});
    }
    b.ranges.push_back(std::move(per_class));
  }
  return b;
}

json report_json(const CalibrationReport& r) {
  json classes = json::array();
  for (const auto& c : r.per_class.classes) {
    classes.push_back({{"class", c.class_index},
                       {"support", c.support},
                       {"accuracy", c.accuracy},
                       {"ece", c.ece},
                       {"ace", c.ace}});
  }
  return {{"estimator", estimator_name(r.estimator)},
          {"n", r.n},
          {"num_classes", r.num_classes},
          {"accuracy", r.accuracy},
          {"ece", r.ece},
          {"mce", r.mce},
          {"mce_bin_frequency", r.mce_bin_frequency},
          {"ace", r.ace},
          {"fixed_binning", fixed_to_json(r.fixed)},
          {"adaptive_binning", adaptive_to_json(r.adaptive)},
          {"per_class",
           {{"classes", classes}, {"omitted", r.per_class.omitted}}},
          {"confusion", r.confusion}};
}

CalibrationReport report_from(const json& j) {
  CalibrationReport r;
  r.estimator = parse_estimator(j.at("estimator").get<std::string>());
  r.n = j.at("n").get<std::size_t>();
  r.num_classes = j.at("num_classes").get<std::size_t>();
  r.accuracy = j.at("accuracy").get<double>();
  r.ece = j.at("ece").get<double>();
  r.mce = j.at("mce").get<double>();
  r.mce_bin_frequency = j.at("mce_bin_frequency").get<std::size_t>();
  r.ace = j.at("ace").get<double>();
  r.fixed = fixed_from_json(j.at("fixed_binning"));
  r.adaptive = adaptive_from_json(j.at("adaptive_binning"));
  for (const auto& c : j.at("per_class").at("classes")) {
    r.per_class.classes.push_back({c.at("class").get<int>(),
                                   c.at("support").get<std::size_t>(),
                                   c.at("accuracy").get<double>(),
                                   c.at("ece").get<double>(),
                                   c.at("ace").get<double>()});
  }
  r.per_class.omitted = j.at("per_class").at("omitted").get<std::vector<int>>();
  r.confusion = j.at("confusion").get<ConfusionMatrix>();
  return r;
}

json summary_json(const MetricSummary& s) {
  json j = {{"mean", s.mean}, {"values", s.values}};
  if (s.sample_std) {
    j["sample_std"] = *s.sample_std;
    j["two_sigma"] = *s.two_sigma;
    j["standard_error"] = *s.standard_error;
    j["mean_minus_2se"] = s.mean - 2.0 * *s.standard_error;
    j["mean_plus_2se"] = s.mean + 2.0 * *s.standard_error;
  }
  return j;
}

MetricSummary summary_from(const json& j) {
  MetricSummary s;
  s.mean = j.at("mean").get<double>();
  s.values = j.at("values").get<std::vector<double>>();
  if (j.contains("sample_std")) {
    s.sample_std = j.at("sample_std").get<double>();
    s.two_sigma = j.at("two_sigma").get<double>();
    s.standard_error = j.at("standard_error").get<double>();
  }
  return s;
}

template <typename Fn>
auto with_format_errors(Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw FormatError(std::string("JSON schema violation: ") + e.what());
  }
}

std::optional<double> auto_or_number(const json& j, const char* key) {
  if (!j.contains(key)) return std::nullopt;
  const auto& v = j.at(key);
  if (v.is_string()) {
    if (v.get<std::string>() == "auto") return std::nullopt;
    throw ConfigError(std::string(key) + " must be \"auto\" or a number");
  }
  const double x = v.get<double>();
  if (!(x > 0.0)) throw ConfigError(std::string(key) + " must be positive");
  return x;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::string substitute_seed(std::string pattern, std::uint64_t seed) {
  const std::string key = "{seed}";
  for (auto pos = pattern.find(key); pos != std::string::npos;
       pos = pattern.find(key, pos)) {
    pattern.replace(pos, key.size(), std::to_string(seed));
  }
  return pattern;
}

SyntheticClassifierSpec synthetic_from(const json& j) {
  SyntheticClassifierSpec s;
  const std::string preset = j.value("preset", "");
  if (preset == "low") {
    s = SyntheticClassifierSpec::low_accuracy();
  } else if (preset == "high") {
    s = SyntheticClassifierSpec::high_accuracy();
  } else if (!preset.empty()) {
    throw ConfigError("unknown synthetic preset '" + preset + "'");
  }
  s.num_classes = j.value("num_classes", s.num_classes);
  s.feature_dim = j.value("feature_dim", s.feature_dim);
  s.margin_low = j.value("margin_low", s.margin_low);
  s.margin_high = j.value("margin_high", s.margin_high);
  s.noise = j.value("noise", s.noise);
  s.weight_scale = j.value("weight_scale", s.weight_scale);
  s.weight_jitter = j.value("weight_jitter", s.weight_jitter);
  s.relu = j.value("relu", s.relu);
  s.validation_per_class =
      j.value("validation_per_class", s.validation_per_class);
  s.holdout_per_class = j.value("holdout_per_class", s.holdout_per_class);
  s.test_per_class = j.value("test_per_class", s.test_per_class);
  return s;
}

}  // namespace

std::string report_to_json(const CalibrationReport& report) {
  return report_json(report).dump(2) + "\n";
}

CalibrationReport report_from_json(std::string_view text) {
  const json j = parse_json(text);
  return with_format_errors([&] { return report_from(j); });
}

std::string table_to_json(const LikelihoodTable& table) {
  json cells = json::array();
  const std::size_t k = table.num_classes();
  for (std::size_t node = 0; node < k; ++node) {
    for (std::size_t cls = 0; cls < k; ++cls) {
      const LikelihoodModel* m = table.cell(node, cls);
      if (!m) continue;
      json runner_up = json::object();
      for (const auto& [name, deficit] : m->runner_up) runner_up[name] = deficit;
      cells.push_back({{"node", node},
                       {"label_class", cls},
                       {"family", family_name(m->family)},
                       {"params", m->params},
                       {"n_samples", m->n_samples},
                       {"log_likelihood", m->log_likelihood},
                       {"pooled", m->pooled},
                       {"runner_up", runner_up}});
    }
  }
  json metadata = json::object();
  for (const auto& [key, value] : table.metadata) metadata[key] = value;
  return json{{"num_classes", k},
              {"delta", table.delta() ? json(*table.delta()) : json(nullptr)},
              {"metadata", metadata},
              {"cells", cells}}
             .dump(2) +
         "\n";
}

LikelihoodTable table_from_json(std::string_view text) {
  const json j = parse_json(text);
  return with_format_errors([&] {
    const auto k = j.at("num_classes").get<std::size_t>();
    std::vector<std::optional<LikelihoodModel>> cells(k * k);
    for (const auto& c : j.at("cells")) {
      const auto node = c.at("node").get<std::size_t>();
      const auto cls = c.at("label_class").get<std::size_t>();
      if (node >= k || cls >= k) throw FormatError("cell index out of range");
      const auto params = c.at("params").get<std::vector<double>>();
      if (params.size() != 2) throw FormatError("cells carry two parameters");
      LikelihoodModel m = make_model(
          parse_family(c.at("family").get<std::string>()), params[0],
          params[1]);
      m.node = static_cast<int>(node);
      m.label_class = static_cast<int>(cls);
      m.n_samples = c.at("n_samples").get<std::size_t>();
      m.log_likelihood = c.at("log_likelihood").get<double>();
      m.pooled = c.value("pooled", false);
      if (c.contains("runner_up")) {
        m.runner_up = c.at("runner_up").get<std::map<std::string, double>>();
      }
      cells[node * k + cls] = std::move(m);
    }
    std::optional<double> delta;
    if (j.contains("delta") && !j.at("delta").is_null()) {
      delta = j.at("delta").get<double>();
    }
    LikelihoodTable table(k, std::move(cells), delta);
    if (j.contains("metadata")) {
      table.metadata =
          j.at("metadata").get<std::map<std::string, std::string>>();
    }
    return table;
  });
}

std::string seed_run_to_json(const SeedRun& run) {
  json reports = json::object();
  for (const auto& [tag, rep] : run.reports) {
    reports[std::string(estimator_name(tag))] = report_json(rep);
  }
  json j = {{"seed", run.seed}, {"ok", run.ok}};
  if (!run.ok) j["error"] = run.error;
  j["delta_used"] = run.delta_used;
  j["beta_used"] = run.beta_used;
  j["temperature"] = 1.0 / run.beta_used;
  j["fallback_rows"] = run.fallback_rows;
  j["reports"] = reports;
  return j.dump(2) + "\n";
}

SeedRun seed_run_from_json(std::string_view text) {
  const json j = parse_json(text);
  return with_format_errors([&] {
    SeedRun run;
    run.seed = j.at("seed").get<std::uint64_t>();
    run.ok = j.at("ok").get<bool>();
    run.error = j.value("error", "");
    run.delta_used = j.at("delta_used").get<double>();
    run.beta_used = j.at("beta_used").get<double>();
    run.fallback_rows = j.at("fallback_rows").get<std::size_t>();
    for (const auto& [name, rep] : j.at("reports").items()) {
      run.reports.emplace(parse_estimator(name), report_from(rep));
    }
    return run;
  });
}

std::string aggregate_to_json(const AggregateResult& result) {
  json estimators = json::object();
  for (const auto& [tag, agg] : result.estimators) {
    estimators[std::string(estimator_name(tag))] = {
        {"ece", summary_json(agg.ece)},
        {"ace", summary_json(agg.ace)},
        {"mce", summary_json(agg.mce)},
        {"mce_bin_frequency", agg.mce_bin_frequency}};
  }
  return json{{"rng", kRngName},
              {"dispersion", "two_sigma = 2 x sample std (n-1); "
                             "standard_error = sample std / sqrt(n)"},
              {"seeds", result.seeds},
              {"failed_seeds", result.failed_seeds},
              {"estimators", estimators}}
             .dump(2) +
         "\n";
}

AggregateResult aggregate_from_json(std::string_view text) {
  const json j = parse_json(text);
  return with_format_errors([&] {
    AggregateResult r;
    r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    r.failed_seeds = j.at("failed_seeds").get<std::vector<std::uint64_t>>();
    for (const auto& [name, e] : j.at("estimators").items()) {
      EstimatorAggregate agg;
      agg.ece = summary_from(e.at("ece"));
      agg.ace = summary_from(e.at("ace"));
      agg.mce = summary_from(e.at("mce"));
      agg.mce_bin_frequency =
          e.at("mce_bin_frequency").get<std::vector<std::size_t>>();
      r.estimators.emplace(parse_estimator(name), std::move(agg));
    }
    return r;
  });
}

ExperimentConfig experiment_config_from_json(std::string_view text,
                                             const fs::path& base_dir) {
  const json j = parse_json(text);
  try {
    ExperimentConfig c;
    const auto& seeds = j.at("seeds");
    if (seeds.is_object()) {
      const auto first = seeds.at("first").get<std::uint64_t>();
      const auto count = seeds.at("count").get<std::uint64_t>();
      for (std::uint64_t s = 0; s < count; ++s) c.seeds.push_back(first + s);
    } else {
      c.seeds = seeds.get<std::vector<std::uint64_t>>();
    }
    if (j.contains("holdout_seed")) {
      c.holdout_seed = j.at("holdout_seed").get<std::uint64_t>();
      bool listed = false;
      for (auto s : c.seeds) listed = listed || s == *c.holdout_seed;
      if (!listed) c.seeds.push_back(*c.holdout_seed);
    }

    if (j.contains("synthetic")) c.synthetic = synthetic_from(j.at("synthetic"));
    if (j.contains("bundles")) {
      for (const auto& [seed, paths] : j.at("bundles").items()) {
        c.bundles[std::stoull(seed)] = {
            resolve(base_dir, paths.at("validation").get<std::string>()),
            resolve(base_dir, paths.at("holdout").get<std::string>()),
            resolve(base_dir, paths.at("test").get<std::string>())};
      }
    }
    if (j.contains("bundle_pattern")) {
      const auto& p = j.at("bundle_pattern");
      for (auto seed : c.seeds) {
        if (c.bundles.count(seed)) continue;
        c.bundles[seed] = {
            resolve(base_dir,
                    substitute_seed(p.at("validation").get<std::string>(), seed)),
            resolve(base_dir,
                    substitute_seed(p.at("holdout").get<std::string>(), seed)),
            resolve(base_dir,
                    substitute_seed(p.at("test").get<std::string>(), seed))};
      }
    }
    if (c.synthetic && !c.bundles.empty()) {
      throw ConfigError("configure either synthetic or bundle paths, not both");
    }
    if (!c.synthetic && c.bundles.empty()) {
      throw ConfigError("experiment needs bundles, bundle_pattern or synthetic");
    }

    if (j.contains("imbalance")) {
      const auto& im = j.at("imbalance");
      if (im.is_string()) {
        if (im.get<std::string>() != "cat_dog_skew") {
          throw ConfigError("imbalance must be \"cat_dog_skew\" or a count list");
        }
        c.imbalance = ImbalanceSpec::cat_dog_skew(0).counts;
      } else {
        c.imbalance = im.get<std::vector<std::size_t>>();
      }
    }

    if (j.contains("class_weights")) {
      const auto& w = j.at("class_weights");
      if (w.is_array()) {
        c.weight_mode = WeightMode::kExplicit;
        c.explicit_weights = w.get<std::vector<double>>();
      } else if (w.get<std::string>() == "uniform") {
        c.weight_mode = WeightMode::kUniform;
      } else if (w.get<std::string>() == "test_fraction") {
        c.weight_mode = WeightMode::kTestFraction;
      } else {
        throw ConfigError("class_weights must be uniform, test_fraction or a list");
      }
    }

    if (j.contains("metrics")) {
      const auto& m = j.at("metrics");
      c.metrics.num_bins = m.value("M", std::size_t{0});
      c.metrics.num_ranges = m.value("R", std::size_t{0});
      c.metrics.threshold = m.value("threshold", kDefaultAceThreshold);
    }
    c.delta = auto_or_number(j, "delta");
    c.beta = auto_or_number(j, "beta");
    const std::string denom = j.value("denominator", "own-node");
    if (denom == "own-node") {
      c.denominator = Denominator::kOwnNode;
    } else if (denom == "per-node-mixture") {
      c.denominator = Denominator::kPerNodeMixture;
    } else {
      throw ConfigError("denominator must be own-node or per-node-mixture");
    }
    c.output_dir = resolve(base_dir, j.value("output_dir", "experiment_out"));
    c.jobs = j.value("jobs", std::size_t{1});
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
}

ClassWeights class_weights_from_json(std::string_view text,
                                     std::size_t num_classes) {
  if (text == "uniform") return ClassWeights::uniform(num_classes);
  const json j = parse_json(text);
  try {
    auto w = j.get<std::vector<double>>();
    if (w.size() != num_classes) {
      throw ConfigError("expected " + std::to_string(num_classes) +
                        " class weights, got " + std::to_string(w.size()));
    }
    return ClassWeights(std::move(w));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("class weights: ") + e.what());
  }
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string content_hash(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace bacon
