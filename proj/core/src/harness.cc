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

#include "bacon/harness.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iterator>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <thread>

#include "bacon/baselines.h"
#include "bacon/errors.h"
#include "bacon/serialization.h"
#include "bacon/stats.h"

namespace bacon {
namespace {

namespace fs = std::filesystem;

constexpr double kHalfPi = std::numbers::pi / 2.0;
constexpr std::size_t kMaxRejections = 1'000'000;
constexpr double kMinTruncatedMass = 1e-6;

// Decorrelated child seeds for the independent parts of one seed's work.
std::uint64_t child_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::uint32_t words[2];
  seq.generate(std::begin(words), std::end(words));
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

std::string class_label(const TensorBundle& bundle, std::size_t c) {
  std::string label = "class " + std::to_string(c);
  const auto it = bundle.metadata.find("class_names");
  if (it == bundle.metadata.end()) return label;
  std::size_t start = 0;
  for (std::size_t i = 0; i < c; ++i) {
    start = it->second.find(',', start);
    if (start == std::string::npos) return label;
    ++start;
  }
  const std::size_t end = it->second.find(',', start);
  return label + " (" + it->second.substr(start, end - start) + ")";
}

// Copies the rows `rows` of every per-sample tensor; class-level tensors
// are copied whole.
TensorBundle select_rows(const TensorBundle& pool,
                         std::span<const std::size_t> rows) {
  const std::size_t n = pool.num_samples();
  TensorBundle out;
  out.metadata = pool.metadata;
  const auto ids = pool.sample_ids();
  for (const auto& t : pool.tensors) {
    if (t.name == "sample_ids") continue;
    const bool per_sample = !t.shape.empty() && t.shape[0] == n &&
                            (t.name == "activations" || t.name == "labels" ||
                             t.name == "logits");
    if (!per_sample) {
      out.set(t);
      continue;
    }
    TensorEntry s = t;
    const std::size_t width = n == 0 ? 0 : t.element_count() / n;
    s.shape[0] = rows.size();
    s.values.clear();
    s.ints.clear();
    for (std::size_t r : rows) {
      if (t.is_floating()) {
        s.values.insert(s.values.end(), t.values.begin() + r * width,
                        t.values.begin() + (r + 1) * width);
      } else {
        s.ints.insert(s.ints.end(), t.ints.begin() + r * width,
                      t.ints.begin() + (r + 1) * width);
      }
    }
    out.set(std::move(s));
  }
  std::vector<std::int64_t> picked;
  picked.reserve(rows.size());
  for (std::size_t r : rows) picked.push_back(ids[r]);
  out.set(make_int_tensor("sample_ids", {rows.size()}, std::move(picked)));
  return out;
}

double truncated_mass(const LikelihoodModel& m) {
  return m.cdf(kHalfPi) - m.cdf(0.0);
}

double draw_in_quadrant(const LikelihoodModel& m, std::mt19937_64& rng) {
  for (std::size_t attempt = 0; attempt < kMaxRejections; ++attempt) {
    const double x = draw(m, rng);
    if (x > 0.0 && x <= kHalfPi) return x;
  }
  throw ConfigError("diagonal distribution has too little mass on (0, pi/2]");
}

std::vector<std::size_t> label_counts(std::span<const int> labels,
                                      std::size_t k) {
  std::vector<std::size_t> counts(k, 0);
  for (int y : labels) ++counts[static_cast<std::size_t>(y)];
  return counts;
}

}  // namespace

ImbalanceSpec ImbalanceSpec::cat_dog_skew(std::uint64_t seed) {
  ImbalanceSpec spec;
  spec.counts.assign(10, 667);
  spec.counts[3] = 333;
  spec.counts[5] = 1000;
  spec.seed = seed;
  return spec;
}

TensorBundle sample_imbalanced(const TensorBundle& pool,
                               const ImbalanceSpec& spec) {
  const std::size_t k = pool.num_classes();
  if (spec.counts.size() != k) {
    throw SamplingError("imbalance spec lists " +
                        std::to_string(spec.counts.size()) +
                        " classes, pool has " + std::to_string(k));
  }
  const auto labels = pool.labels();
  std::vector<std::vector<std::size_t>> by_class(k);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (by_class[c].size() < spec.counts[c]) {
      throw SamplingError(class_label(pool, c) + " requests " +
                          std::to_string(spec.counts[c]) +
                          " samples but the pool holds " +
                          std::to_string(by_class[c].size()));
    }
  }

  std::mt19937_64 rng(spec.seed);
  std::vector<std::size_t> picked;
  for (std::size_t c = 0; c < k; ++c) {
    auto& idx = by_class[c];
    // Partial Fisher-Yates: the first counts[c] slots become the sample.
    for (std::size_t i = 0; i < spec.counts[c]; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
      std::swap(idx[i], idx[pick(rng)]);
      picked.push_back(idx[i]);
    }
  }
  std::shuffle(picked.begin(), picked.end(), rng);

  TensorBundle out = select_rows(pool, picked);
  out.metadata["sampler"] = std::string(kRngName);
  out.metadata["sampler_seed"] = std::to_string(spec.seed);
  return out;
}

ClassWeights weights_from_counts(std::span<const std::size_t> counts) {
  const std::size_t top = *std::max_element(counts.begin(), counts.end());
  if (top == 0) throw ConfigError("class counts are all zero");
  std::vector<double> w(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) {
    w[c] = static_cast<double>(counts[c]) / static_cast<double>(top);
  }
  return ClassWeights(std::move(w));
}

SyntheticOracle generate_synthetic(const SyntheticOracleSpec& spec) {
  const std::size_t k = spec.diagonals.size();
  if (k < 2) throw ConfigError("synthetic oracle needs K >= 2");
  if (spec.priors.size() != k) throw ConfigError("one prior per class needed");
  double prior_sum = 0.0;
  for (double p : spec.priors) {
    if (!(p >= 0.0)) throw ConfigError("priors must be nonnegative");
    prior_sum += p;
  }
  if (std::abs(prior_sum - 1.0) > 1e-9) {
    throw ConfigError("priors must sum to 1");
  }
  std::vector<double> log_mass(k);
  for (std::size_t c = 0; c < k; ++c) {
    const auto& m = spec.diagonals[c];
    make_model(m.family, m.params[0], m.params[1]);
    const double mass = truncated_mass(m);
    if (!(mass > kMinTruncatedMass)) {
      throw ConfigError("diagonal " + std::to_string(c) +
                        " has negligible mass on (0, pi/2]");
    }
    log_mass[c] = std::log(mass);
  }

  std::mt19937_64 rng(spec.seed);
  std::discrete_distribution<int> pick_class(spec.priors.begin(),
                                             spec.priors.end());
  std::uniform_real_distribution<double> uniform_angle(0.0, kHalfPi);

  SyntheticOracle out;
  out.angles.resize(spec.n_samples);
  out.posterior = Matrix(spec.n_samples, k);
  std::vector<double> log_post(k);
  for (std::size_t n = 0; n < spec.n_samples; ++n) {
    auto& rec = out.angles[n];
    rec.sample_id = static_cast<std::int64_t>(n);
    rec.label = pick_class(rng);
    rec.angles.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
      const bool own = static_cast<int>(j) == rec.label ||
                       spec.off_diagonal == OffDiagonalMode::kOwnDiagonal;
      rec.angles[j] = own ? draw_in_quadrant(spec.diagonals[j], rng)
                          : uniform_angle(rng);
    }

    auto row = out.posterior.row(n);
    if (spec.off_diagonal == OffDiagonalMode::kOwnDiagonal) {
      std::copy(spec.priors.begin(), spec.priors.end(), row.begin());
      continue;
    }
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
      log_post[j] = spec.priors[j] > 0.0
                        ? std::log(spec.priors[j]) +
                              spec.diagonals[j].log_pdf(rec.angles[j]) -
                              log_mass[j]
                        : -std::numeric_limits<double>::infinity();
      top = std::max(top, log_post[j]);
    }
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      row[j] = std::exp(log_post[j] - top);
      total += row[j];
    }
    for (double& p : row) p /= total;
  }
  return out;
}

SyntheticClassifierSpec SyntheticClassifierSpec::low_accuracy() {
  SyntheticClassifierSpec s;
  s.margin_low = 2.2;
  s.margin_high = 3.3;
  return s;
}

SyntheticClassifierSpec SyntheticClassifierSpec::high_accuracy() {
  SyntheticClassifierSpec s;
  s.margin_low = 2.8;
  s.margin_high = 4.6;
  return s;
}

SyntheticSplits generate_synthetic_classifier(
    const SyntheticClassifierSpec& spec, std::uint64_t seed) {
  const std::size_t k = spec.num_classes;
  const std::size_t d = spec.feature_dim;
  if (k < 2 || d < k) {
    throw ConfigError("synthetic classifier needs K >= 2 and D >= K");
  }
  if (!(spec.margin_low > 0.0) || spec.margin_high < spec.margin_low ||
      !(spec.noise > 0.0) || !(spec.weight_scale > 0.0) ||
      !(spec.weight_jitter >= 0.0)) {
    throw ConfigError("synthetic classifier parameters out of range");
  }

  std::mt19937_64 net_rng(child_seed(seed, 0));
  std::normal_distribution<double> jitter(0.0, 1.0);
  Matrix weights(k, d);
  for (std::size_t c = 0; c < k; ++c) {
    double norm = 0.0;
    for (std::size_t f = 0; f < d; ++f) {
      const double w =
          (f == c ? 1.0 : 0.0) + spec.weight_jitter * jitter(net_rng);
      weights(c, f) = w;
      norm += w * w;
    }
    norm = std::sqrt(norm);
    for (double& w : weights.row(c)) w *= spec.weight_scale / norm;
  }
  const std::vector<double> biases(k, 0.0);
  std::vector<double> margins(k);
  for (std::size_t c = 0; c < k; ++c) {
    margins[c] = spec.margin_low + (spec.margin_high - spec.margin_low) *
                                       static_cast<double>(c) /
                                       static_cast<double>(k - 1);
  }

  auto make_split = [&](std::size_t per_class, std::uint64_t stream,
                        const char* name) {
    std::mt19937_64 rng(child_seed(seed, stream));
    std::normal_distribution<double> gauss(0.0, 1.0);
    const std::size_t n = per_class * k;
    Matrix acts(n, d);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = i % k;
      labels[i] = static_cast<int>(c);
      bool zero = true;
      for (std::size_t f = 0; f < d; ++f) {
        double a = (f == c ? margins[c] : 0.0) + spec.noise * gauss(rng);
        if (spec.relu) a = std::max(a, 0.0);
        acts(i, f) = a;
        zero = zero && a == 0.0;
      }
      // A ReLU can zero a whole row; nudge it to keep angles defined.
      if (zero) acts(i, c) = 1e-6;
    }
    const auto records = compute_logits(acts, weights, biases);
    Matrix logits(n, k);
    for (std::size_t i = 0; i < n; ++i) {
      std::copy(records[i].logits.begin(), records[i].logits.end(),
                logits.row(i).begin());
    }
    TensorBundle b =
        make_classifier_bundle(acts, weights, labels, biases, logits);
    b.metadata["source"] = "synthetic-classifier";
    b.metadata["split"] = name;
    b.metadata["seed"] = std::to_string(seed);
    b.metadata["activation_mode"] = spec.relu ? "post-activation" : "linear";
    b.metadata["rng"] = std::string(kRngName);
    return b;
  };

  return {make_split(spec.validation_per_class, 1, "validation"),
          make_split(spec.holdout_per_class, 2, "holdout"),
          make_split(spec.test_per_class, 3, "test")};
}

SeedRun run_seed(std::uint64_t seed, const TensorBundle& validation,
                 const TensorBundle& holdout, const TensorBundle& test,
                 const ExperimentConfig& config,
                 const TunedParameters& tuned) {
  SeedRun run;
  run.seed = seed;
  const std::size_t k = validation.num_classes();
  if (holdout.num_classes() != k || test.num_classes() != k) {
    throw ValidationError("bundles of one seed disagree on the class count");
  }

  const auto val_angles = angles_from_bundle(validation);
  LikelihoodTable table = build_likelihood_table(val_angles, k);
  BaconOptions options;
  options.denominator = config.denominator;

  if (auto d = config.delta ? config.delta : tuned.delta) {
    table.set_delta(*d);
  } else {
    const auto hold_angles = angles_from_bundle(holdout);
    calibrate_delta(table, ClassWeights::uniform(k), hold_angles,
                    config.metrics.num_bins, options);
  }
  run.delta_used = table.require_delta();

  if (auto b = config.beta ? config.beta : tuned.beta) {
    run.beta_used = *b;
  } else {
    run.beta_used = fit_temperature(logits_from_bundle(holdout)).beta;
  }

  const TensorBundle sampled =
      config.imbalance ? sample_imbalanced(test, {*config.imbalance, seed})
                       : test;
  const auto test_angles = angles_from_bundle(sampled);
  const auto test_logits = logits_from_bundle(sampled);
  const auto test_labels = sampled.labels();

  ClassWeights weights = ClassWeights::uniform(k);
  switch (config.weight_mode) {
    case WeightMode::kUniform:
      break;
    case WeightMode::kTestFraction:
      weights = weights_from_counts(label_counts(test_labels, k));
      break;
    case WeightMode::kExplicit:
      weights = ClassWeights(config.explicit_weights);
      break;
  }

  auto plain = bacon_confidences(test_angles, table, ClassWeights::uniform(k),
                                 {config.denominator, EstimatorTag::kBacon});
  auto weighted = bacon_confidences(
      test_angles, table, weights,
      {config.denominator, EstimatorTag::kBaconWeighted});
  run.fallback_rows = plain.fallback_rows.size();

  run.reports.emplace(EstimatorTag::kBacon,
                      evaluate(plain.confidences, config.metrics));
  run.reports.emplace(EstimatorTag::kBaconWeighted,
                      evaluate(weighted.confidences, config.metrics));
  run.reports.emplace(
      EstimatorTag::kSoftmax,
      evaluate(softmax(test_logits, 1.0, EstimatorTag::kSoftmax),
               config.metrics));
  run.reports.emplace(
      EstimatorTag::kTScaledSoftmax,
      evaluate(softmax(test_logits, run.beta_used,
                       EstimatorTag::kTScaledSoftmax),
               config.metrics));
  run.ok = true;
  return run;
}

namespace {

SyntheticSplits load_seed(const ExperimentConfig& config, std::uint64_t seed) {
  if (config.synthetic) {
    return generate_synthetic_classifier(*config.synthetic, seed);
  }
  const auto it = config.bundles.find(seed);
  if (it == config.bundles.end()) {
    throw ConfigError("no bundles configured for seed " + std::to_string(seed));
  }
  return {read_bundle(it->second.validation), read_bundle(it->second.holdout),
          read_bundle(it->second.test)};
}

TunedParameters tune_on_holdout_seed(const ExperimentConfig& config) {
  TunedParameters tuned;
  if (!config.holdout_seed || (config.delta && config.beta)) return tuned;
  const auto splits = load_seed(config, *config.holdout_seed);
  const std::size_t k = splits.validation.num_classes();
  if (!config.delta) {
    LikelihoodTable table =
        build_likelihood_table(angles_from_bundle(splits.validation), k);
    tuned.delta =
        calibrate_delta(table, ClassWeights::uniform(k),
                        angles_from_bundle(splits.holdout),
                        config.metrics.num_bins, {config.denominator, std::nullopt})
            .delta;
  }
  if (!config.beta) {
    tuned.beta = fit_temperature(logits_from_bundle(splits.holdout)).beta;
  }
  return tuned;
}

}  // namespace

std::vector<SeedRun> run_experiment(const ExperimentConfig& config) {
  if (config.seeds.empty()) throw ConfigError("experiment lists no seeds");
  const TunedParameters tuned = tune_on_holdout_seed(config);

  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s : config.seeds) {
    if (!config.holdout_seed || s != *config.holdout_seed) seeds.push_back(s);
  }
  std::vector<SeedRun> runs(seeds.size());

  auto work = [&](std::size_t i) {
    try {
      const auto splits = load_seed(config, seeds[i]);
      runs[i] = run_seed(seeds[i], splits.validation, splits.holdout,
                         splits.test, config, tuned);
    } catch (const std::exception& e) {
      runs[i] = SeedRun{};
      runs[i].seed = seeds[i];
      runs[i].ok = false;
      runs[i].error = e.what();
    }
  };

  const std::size_t jobs = std::max<std::size_t>(1, config.jobs);
  if (jobs == 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < std::min(jobs, seeds.size()); ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < seeds.size(); i = next++) work(i);
      });
    }
  }

  if (std::none_of(runs.begin(), runs.end(),
                   [](const SeedRun& r) { return r.ok; })) {
    std::string why = runs.empty() ? "no seeds to run" : runs.front().error;
    throw AggregationError("every seed failed; first error: " + why);
  }
  return runs;
}

MetricSummary summarize(std::span<const double> values) {
  MetricSummary s;
  s.values.assign(values.begin(), values.end());
  s.mean = mean(values);
  if (auto sd = sample_std(values)) {
    s.sample_std = *sd;
    s.two_sigma = 2.0 * *sd;
    s.standard_error = *sd / std::sqrt(static_cast<double>(values.size()));
  }
  return s;
}

AggregateResult aggregate(std::span<const SeedRun> runs) {
  AggregateResult out;
  std::map<EstimatorTag, std::vector<double>> ece_v, ace_v, mce_v;
  for (const auto& r : runs) {
    if (!r.ok) {
      out.failed_seeds.push_back(r.seed);
      continue;
    }
    out.seeds.push_back(r.seed);
    for (const auto& [tag, rep] : r.reports) {
      ece_v[tag].push_back(rep.ece);
      ace_v[tag].push_back(rep.ace);
      mce_v[tag].push_back(rep.mce);
      out.estimators[tag].mce_bin_frequency.push_back(rep.mce_bin_frequency);
    }
  }
  if (out.seeds.empty()) throw AggregationError("no successful runs");
  for (auto& [tag, agg] : out.estimators) {
    agg.ece = summarize(ece_v[tag]);
    agg.ace = summarize(ace_v[tag]);
    agg.mce = summarize(mce_v[tag]);
  }
  return out;
}

void write_experiment_outputs(std::span<const SeedRun> runs,
                              const AggregateResult& result,
                              const fs::path& output_dir) {
  for (const auto& r : runs) {
    write_text_file(output_dir / "runs" / std::to_string(r.seed) /
                        "report.json",
                    seed_run_to_json(r));
  }
  write_text_file(output_dir / "aggregate.json", aggregate_to_json(result));
}

}  // namespace bacon
