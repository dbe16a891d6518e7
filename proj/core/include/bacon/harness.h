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

#ifndef BACON_HARNESS_H_
#define BACON_HARNESS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "bacon/bundle_io.h"
#include "bacon/distributions.h"
#include "bacon/geometry.h"
#include "bacon/metrics.h"
#include "bacon/posterior.h"

namespace bacon {

inline constexpr std::string_view kRngName = "mt19937_64";

// ---------------------------------------------------------------------------
// Imbalanced test-set sampling.

struct ImbalanceSpec {
  // Requested sample count per class.
  std::vector<std::size_t> counts;
  std::uint64_t seed = 0;

  // Ten classes: 667 each except class 3 (cat, 333) and class 5 (dog, 1000).
  static ImbalanceSpec cat_dog_skew(std::uint64_t seed);
};

// Per-class sampling without replacement followed by a shuffle of the
// selection. Identical pool, spec and seed give an identical subset.
// Throws SamplingError naming the first class whose pool is too small.
TensorBundle sample_imbalanced(const TensorBundle& pool,
                               const ImbalanceSpec& spec);

// Class weights proportional to the per-class counts, scaled so the largest
// is 1 (0.333 / 1.0 / 0.667 for the ten-class spec above).
ClassWeights weights_from_counts(std::span<const std::size_t> counts);

// ---------------------------------------------------------------------------
// Synthetic angle oracle.

enum class OffDiagonalMode {
  // Non-class node angles are uniform on (0, pi/2). Under this process the
  // own-node Bayes posterior w_c f_c(phi_c) / sum_i w_i f_i(phi_i) is the
  // exact class posterior, with f truncated to (0, pi/2].
  kUninformative,
  // Every node angle is drawn from that node's own diagonal distribution
  // regardless of the class, so the class posterior equals the prior.
  kOwnDiagonal,
};

struct SyntheticOracleSpec {
  // Diagonal angle distribution of each class; K = diagonals.size().
  std::vector<LikelihoodModel> diagonals;
  std::vector<double> priors;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
  OffDiagonalMode off_diagonal = OffDiagonalMode::kUninformative;
};

struct SyntheticOracle {
  std::vector<AngleRecord> angles;
  // True class posterior of every sample, N x K.
  Matrix posterior;
};

// Throws ConfigError on an invalid spec (K < 2, priors not summing to one,
// a diagonal with negligible mass on (0, pi/2]).
SyntheticOracle generate_synthetic(const SyntheticOracleSpec& spec);

// ---------------------------------------------------------------------------
// Synthetic classifier exports.

// A linear read-out over noisy class prototypes. Class c activations are
// relu(m_c e_c + noise * xi) with xi standard normal in D >= K dimensions
// and m_c spaced linearly over [margin_low, margin_high], so classes differ
// in accuracy. Each weight row is e_c plus a small jitter rescaled to norm
// `weight_scale`; logits are W a. A large `weight_scale` sharpens the
// softmax without moving its predictions, which makes it overconfident.
struct SyntheticClassifierSpec {
  std::size_t num_classes = 10;
  std::size_t feature_dim = 16;
  double margin_low = 2.2;
  double margin_high = 3.4;
  double noise = 1.0;
  double weight_scale = 30.0;
  double weight_jitter = 0.05;
  bool relu = true;
  std::size_t validation_per_class = 1000;
  std::size_t holdout_per_class = 500;
  std::size_t test_per_class = 1000;

  // Roughly 85% and 95% accurate presets.
  static SyntheticClassifierSpec low_accuracy();
  static SyntheticClassifierSpec high_accuracy();
};

struct SyntheticSplits {
  TensorBundle validation;
  TensorBundle holdout;
  TensorBundle test;
};

// One "trained network" per seed: shared weights across the three splits.
SyntheticSplits generate_synthetic_classifier(
    const SyntheticClassifierSpec& spec, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Multi-seed experiments.

struct SeedBundlePaths {
  std::filesystem::path validation;
  std::filesystem::path holdout;
  std::filesystem::path test;
};

enum class WeightMode { kUniform, kTestFraction, kExplicit };

struct ExperimentConfig {
  std::vector<std::uint64_t> seeds;
  // Seed whose bundles tune delta and beta; excluded from aggregation.
  std::optional<std::uint64_t> holdout_seed;

  // Exactly one source: explicit paths per seed or a synthetic generator.
  std::map<std::uint64_t, SeedBundlePaths> bundles;
  std::optional<SyntheticClassifierSpec> synthetic;

  // Applied to each seed's test bundle with that seed; absent keeps the
  // whole test bundle.
  std::optional<std::vector<std::size_t>> imbalance;

  WeightMode weight_mode = WeightMode::kTestFraction;
  std::vector<double> explicit_weights;

  MetricOptions metrics;
  // nullopt means tune on the hold-out bundle.
  std::optional<double> delta;
  std::optional<double> beta;
  Denominator denominator = Denominator::kOwnNode;

  std::filesystem::path output_dir = "experiment_out";
  std::size_t jobs = 1;
};

struct SeedRun {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double delta_used = 0.0;
  double beta_used = 1.0;
  std::size_t fallback_rows = 0;
  std::map<EstimatorTag, CalibrationReport> reports;
};

// Fits, calibrates and evaluates every estimator for each seed. Per-seed
// failures are recorded and the run continues; throws AggregationError if
// no seed succeeds. Output order follows config.seeds.
std::vector<SeedRun> run_experiment(const ExperimentConfig& config);

// Single-seed pipeline on in-memory bundles. `tuned` supplies delta/beta
// already fitted elsewhere (hold-out seed); otherwise the hold-out bundle is
// used.
struct TunedParameters {
  std::optional<double> delta;
  std::optional<double> beta;
};
SeedRun run_seed(std::uint64_t seed, const TensorBundle& validation,
                 const TensorBundle& holdout, const TensorBundle& test,
                 const ExperimentConfig& config,
                 const TunedParameters& tuned = {});

struct MetricSummary {
  double mean = 0.0;
  std::optional<double> sample_std;
  std::optional<double> two_sigma;
  std::optional<double> standard_error;
  std::vector<double> values;
};

struct EstimatorAggregate {
  MetricSummary ece;
  MetricSummary ace;
  MetricSummary mce;
  std::vector<std::size_t> mce_bin_frequency;
};

struct AggregateResult {
  std::vector<std::uint64_t> seeds;
  std::vector<std::uint64_t> failed_seeds;
  std::map<EstimatorTag, EstimatorAggregate> estimators;
};

MetricSummary summarize(std::span<const double> values);

// Folds successful runs. Throws AggregationError when none succeeded.
AggregateResult aggregate(std::span<const SeedRun> runs);

// Writes runs/<seed>/report.json and aggregate.json under output_dir.
void write_experiment_outputs(std::span<const SeedRun> runs,
                              const AggregateResult& result,
                              const std::filesystem::path& output_dir);

}  // namespace bacon

#endif  // BACON_HARNESS_H_
