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

#include <cmath>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "bacon/baselines.h"
#include "bacon/distributions.h"
#include "bacon/geometry.h"
#include "bacon/harness.h"
#include "bacon/metrics.h"
#include "bacon/posterior.h"

namespace {

using namespace bacon;

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (double& x : m.row(r)) x = g(rng);
  }
  return m;
}

void BM_Angles(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto d = static_cast<std::size_t>(state.range(1));
  const Matrix acts = random_matrix(n, d, 1);
  const Matrix w = random_matrix(10, d, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_angles(acts, w));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n));
}
BENCHMARK(BM_Angles)->Args({10000, 64})->Args({10000, 512});

std::vector<double> samples(Family f, std::size_t n) {
  std::mt19937_64 rng(3);
  const auto m = make_model(f, f == Family::kLogNormal ? -0.5 : 0.8, 0.1);
  std::vector<double> out(n);
  for (double& x : out) x = draw(m, rng);
  return out;
}

void BM_Fit(benchmark::State& state) {
  const auto family = static_cast<Family>(state.range(0));
  const auto xs = samples(family, static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(fit(xs, family));
  state.SetLabel(std::string(family_name(family)));
}
BENCHMARK(BM_Fit)
    ->Args({static_cast<int>(Family::kNormal), 100000})
    ->Args({static_cast<int>(Family::kLogNormal), 100000})
    ->Args({static_cast<int>(Family::kCauchy), 100000});

void BM_SelectFamily(benchmark::State& state) {
  const auto xs = samples(Family::kCauchy, 5000);
  for (auto _ : state) benchmark::DoNotOptimize(select_family(xs));
}
BENCHMARK(BM_SelectFamily);

struct Workload {
  SyntheticSplits splits;
  std::vector<AngleRecord> val, test;
  LikelihoodTable table;
};

const Workload& workload() {
  static const Workload w = [] {
    Workload out;
    out.splits = generate_synthetic_classifier(
        SyntheticClassifierSpec::low_accuracy(), 1);
    out.val = angles_from_bundle(out.splits.validation);
    out.test = angles_from_bundle(out.splits.test);
    out.table = build_likelihood_table(out.val, 10);
    out.table.set_delta(0.01);
    return out;
  }();
  return w;
}

void BM_BuildTable(benchmark::State& state) {
  const auto& w = workload();
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_likelihood_table(w.val, 10));
  }
}
BENCHMARK(BM_BuildTable)->Unit(benchmark::kMillisecond);

void BM_Bacon(benchmark::State& state) {
  const auto& w = workload();
  const BaconOptions options{static_cast<Denominator>(state.range(0)),
                             std::nullopt};
  const auto weights = weights_from_counts(ImbalanceSpec::cat_dog_skew(0).counts);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        bacon_confidences(w.test, w.table, weights, options));
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<int64_t>(w.test.size()));
}
BENCHMARK(BM_Bacon)
    ->Arg(static_cast<int>(Denominator::kOwnNode))
    ->Arg(static_cast<int>(Denominator::kPerNodeMixture))
    ->Unit(benchmark::kMillisecond);

ConfidenceMatrix softmax_workload() {
  return softmax(logits_from_bundle(workload().splits.test), 1.0);
}

void BM_Ece(benchmark::State& state) {
  const auto cm = softmax_workload();
  for (auto _ : state) benchmark::DoNotOptimize(ece(cm, 15));
}
BENCHMARK(BM_Ece);

void BM_Ace(benchmark::State& state) {
  const auto cm = softmax_workload();
  for (auto _ : state) benchmark::DoNotOptimize(ace(cm, 9, 0.001));
}
BENCHMARK(BM_Ace)->Unit(benchmark::kMillisecond);

void BM_FitTemperature(benchmark::State& state) {
  const auto logits = logits_from_bundle(workload().splits.holdout);
  for (auto _ : state) benchmark::DoNotOptimize(fit_temperature(logits));
}
BENCHMARK(BM_FitTemperature)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
