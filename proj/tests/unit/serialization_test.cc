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

#include <random>
#include <string>

#include <gtest/gtest.h>

#include "bacon/errors.h"
#include "test_util.h"

namespace bacon {
namespace {

CalibrationReport sample_report() {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = 300, k = 4;
  Matrix probs(n, k);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) total += probs(i, j) = u(rng) + 0.01;
    for (std::size_t j = 0; j < k; ++j) probs(i, j) /= total;
    // Class 3 never occurs, so per-class omits it.
    labels[i] = static_cast<int>(i % 3);
  }
  return evaluate(ConfidenceMatrix(std::move(probs), std::move(labels),
                                   EstimatorTag::kBaconWeighted),
                  {6, 5, 0.001});
}

TEST(ReportJson, RoundTrip) {
  const auto rep = sample_report();
  const std::string text = report_to_json(rep);
  const auto back = report_from_json(text);
  EXPECT_EQ(back.estimator, EstimatorTag::kBaconWeighted);
  EXPECT_EQ(back.n, rep.n);
  EXPECT_EQ(back.ece, rep.ece);
  EXPECT_EQ(back.mce, rep.mce);
  EXPECT_EQ(back.ace, rep.ace);
  EXPECT_EQ(back.mce_bin_frequency, rep.mce_bin_frequency);
  EXPECT_EQ(back.fixed.edges, rep.fixed.edges);
  EXPECT_EQ(back.fixed.counts, rep.fixed.counts);
  EXPECT_EQ(back.fixed.confidence, rep.fixed.confidence);
  EXPECT_EQ(back.adaptive.class_counts, rep.adaptive.class_counts);
  EXPECT_EQ(back.per_class.omitted, std::vector<int>{3});
  EXPECT_EQ(back.confusion, rep.confusion);
  // Stable encoding.
  EXPECT_EQ(report_to_json(back), text);
}

TEST(ReportJson, SchemaViolations) {
  EXPECT_THROW(report_from_json("{"), FormatError);
  EXPECT_THROW(report_from_json("{}"), FormatError);
  std::string text = report_to_json(sample_report());
  const auto pos = text.find("\"ece\"");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 5, "\"xxx\"");
  try {
    report_from_json(text);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("schema"), std::string::npos);
  }
}

TEST(TableJson, RoundTrip) {
  std::vector<std::optional<LikelihoodModel>> cells(4);
  cells[0] = make_model(Family::kNormal, 0.3, 0.05);
  cells[1] = make_model(Family::kCauchy, 1.2, 0.1);
  cells[3] = make_model(Family::kLogNormal, -0.5, 0.2);
  cells[1]->pooled = true;
  LikelihoodTable table(2, cells, 0.0125);
  table.metadata["source"] = "unit";
  const auto back = table_from_json(table_to_json(table));
  EXPECT_EQ(back.num_classes(), 2u);
  EXPECT_EQ(*back.delta(), 0.0125);
  EXPECT_EQ(back.diagonal(1).family, Family::kLogNormal);
  EXPECT_EQ(back.diagonal(0).params, table.diagonal(0).params);
  ASSERT_NE(back.cell(0, 1), nullptr);
  EXPECT_TRUE(back.cell(0, 1)->pooled);
  EXPECT_EQ(back.cell(1, 0), nullptr);
  EXPECT_EQ(back.metadata.at("source"), "unit");
  EXPECT_EQ(table_to_json(back), table_to_json(table));
}

TEST(SeedRunJson, RoundTripIncludingFailure) {
  SeedRun ok;
  ok.seed = 3;
  ok.ok = true;
  ok.delta_used = 0.02;
  ok.beta_used = 0.4;
  ok.fallback_rows = 2;
  ok.reports.emplace(EstimatorTag::kBaconWeighted, sample_report());
  const auto back = seed_run_from_json(seed_run_to_json(ok));
  EXPECT_EQ(back.seed, 3u);
  EXPECT_EQ(back.delta_used, 0.02);
  EXPECT_EQ(back.fallback_rows, 2u);
  ASSERT_EQ(back.reports.count(EstimatorTag::kBaconWeighted), 1u);

  SeedRun bad;
  bad.seed = 4;
  bad.error = "no bundles configured for seed 4";
  const auto b2 = seed_run_from_json(seed_run_to_json(bad));
  EXPECT_FALSE(b2.ok);
  EXPECT_EQ(b2.error, bad.error);
}

TEST(AggregateJson, RoundTripKeepsMissingSigma) {
  AggregateResult r;
  r.seeds = {1};
  r.failed_seeds = {2};
  const std::vector<double> one = {0.05};
  auto& e = r.estimators[EstimatorTag::kSoftmax];
  e.ece = summarize(one);
  e.ace = summarize(one);
  e.mce = summarize(one);
  e.mce_bin_frequency = {12};
  const auto text = aggregate_to_json(r);
  const auto back = aggregate_from_json(text);
  EXPECT_EQ(back.failed_seeds, r.failed_seeds);
  EXPECT_FALSE(back.estimators.at(EstimatorTag::kSoftmax).ece.sample_std);
  EXPECT_EQ(aggregate_to_json(back), text);
}

TEST(ExperimentConfig, ParsesEverything) {
  const auto c = experiment_config_from_json(R"({
    "seeds": {"first": 10, "count": 3},
    "holdout_seed": 99,
    "synthetic": {"preset": "high", "num_classes": 5, "feature_dim": 9},
    "imbalance": "cat_dog_skew",
    "class_weights": "uniform",
    "metrics": {"M": 15, "R": 7, "threshold": 0.01},
    "delta": 0.05,
    "beta": "auto",
    "denominator": "per-node-mixture",
    "output_dir": "out",
    "jobs": 2
  })", "/base");
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{10, 11, 12, 99}));
  EXPECT_EQ(*c.holdout_seed, 99u);
  ASSERT_TRUE(c.synthetic);
  EXPECT_EQ(c.synthetic->num_classes, 5u);
  EXPECT_EQ(c.synthetic->margin_low,
            SyntheticClassifierSpec::high_accuracy().margin_low);
  EXPECT_EQ(c.imbalance->at(3), 333u);
  EXPECT_EQ(c.weight_mode, WeightMode::kUniform);
  EXPECT_EQ(c.metrics.num_bins, 15u);
  EXPECT_EQ(c.metrics.num_ranges, 7u);
  EXPECT_EQ(c.metrics.threshold, 0.01);
  EXPECT_EQ(*c.delta, 0.05);
  EXPECT_FALSE(c.beta);
  EXPECT_EQ(c.denominator, Denominator::kPerNodeMixture);
  EXPECT_EQ(c.output_dir, std::filesystem::path("/base/out"));
  EXPECT_EQ(c.jobs, 2u);
}

TEST(ExperimentConfig, BundlePatternResolvesRelativePaths) {
  const auto c = experiment_config_from_json(R"({
    "seeds": [1, 2],
    "bundle_pattern": {"validation": "b/{seed}/val", "holdout": "b/{seed}/hold",
                       "test": "/abs/{seed}/test"},
    "class_weights": [1, 2, 3]
  })", "/cfg");
  EXPECT_EQ(c.bundles.at(2).validation, std::filesystem::path("/cfg/b/2/val"));
  EXPECT_EQ(c.bundles.at(1).test, std::filesystem::path("/abs/1/test"));
  EXPECT_EQ(c.weight_mode, WeightMode::kExplicit);
  EXPECT_EQ(c.explicit_weights, (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(c.weight_mode, WeightMode::kExplicit);
  EXPECT_FALSE(c.imbalance);
}

TEST(ExperimentConfig, Rejects) {
  EXPECT_THROW(experiment_config_from_json(R"({"seeds": [1]})"), ConfigError);
  EXPECT_THROW(experiment_config_from_json(
                   R"({"seeds": [1], "synthetic": {"preset": "medium"}})"),
               ConfigError);
  EXPECT_THROW(
      experiment_config_from_json(
          R"({"seeds": [1], "synthetic": {}, "denominator": "other"})"),
      ConfigError);
  EXPECT_THROW(experiment_config_from_json(
                   R"({"seeds": [1], "synthetic": {}, "delta": -1})"),
               ConfigError);
  EXPECT_THROW(experiment_config_from_json(
                   R"({"seeds": [1], "synthetic": {}, "imbalance": "x"})"),
               ConfigError);
  EXPECT_THROW(
      experiment_config_from_json(
          R"({"seeds": [1], "synthetic": {},
              "bundles": {"1": {"validation": "a", "holdout": "b", "test": "c"}}})"),
      ConfigError);
  EXPECT_THROW(experiment_config_from_json("not json"), FormatError);
}

TEST(ClassWeightsJson, Parse) {
  EXPECT_TRUE(class_weights_from_json("uniform", 3).is_uniform());
  const auto w = class_weights_from_json("[0.5, 1, 0.25]", 3);
  EXPECT_EQ(w[2], 0.25);
  EXPECT_THROW(class_weights_from_json("[1, 2]", 3), ConfigError);
  EXPECT_THROW(class_weights_from_json("[-1, 2, 1]", 3), ConfigError);
}

TEST(TextFiles, RoundTripAndErrors) {
  testing::TempDir dir;
  const auto p = dir / "a/b/c.txt";
  write_text_file(p, "hello\n");
  EXPECT_EQ(read_text_file(p), "hello\n");
  EXPECT_THROW(read_text_file(dir / "missing"), IoError);
  EXPECT_THROW(write_text_file(p / "under_a_file", "x"), IoError);
}

// FNV-1a 64 reference vectors.
TEST(ContentHash, KnownValues) {
  EXPECT_EQ(content_hash(""), "cbf29ce484222325");
  EXPECT_EQ(content_hash("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(content_hash("foobar"), "85944171f73967e8");
}

}  // namespace
}  // namespace bacon
