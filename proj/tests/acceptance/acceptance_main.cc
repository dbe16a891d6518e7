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

// Acceptance checks. Prints one [PASS]/[FAIL] line per criterion and exits
// nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "bacon/baselines.h"
#include "bacon/distributions.h"
#include "bacon/geometry.h"
#include "bacon/harness.h"
#include "bacon/metrics.h"
#include "bacon/posterior.h"
#include "bacon/serialization.h"
#include "bacon/stats.h"

namespace {

using namespace bacon;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [x]");
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome geometry() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const Matrix w(3, 2, {1, 0, 0, 1, 1, 1});
  const Matrix a(1, 2, {1, 0});
  const auto phi = compute_angles(a, w)[0].angles;
  o.require(phi[0] == 0.0, "parallel 0");
  o.require(std::abs(phi[1] - std::numbers::pi / 2) < 1e-12, "orthogonal pi/2");
  o.require(std::abs(phi[2] - std::numbers::pi / 4) < 1e-12, "45deg pi/4");

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  std::uniform_real_distribution<double> log_scale(-3, 3);
  double worst = 0;
  for (int t = 0; t < 1000; ++t) {
    Matrix acts(1, 16), ws(10, 16);
    for (double& x : acts.row(0)) x = u(rng);
    for (std::size_t r = 0; r < 10; ++r) {
      for (double& x : ws.row(r)) x = u(rng);
    }
    const auto base = compute_angles(acts, ws)[0].angles;
    const double ca = std::pow(10.0, log_scale(rng));
    const double cw = std::pow(10.0, log_scale(rng));
    for (double& x : acts.row(0)) x *= ca;
    for (std::size_t r = 0; r < 10; ++r) {
      for (double& x : ws.row(r)) x *= cw;
    }
    const auto scaled = compute_angles(acts, ws)[0].angles;
    for (std::size_t j = 0; j < 10; ++j) {
      worst = std::max(worst, std::abs(base[j] - scaled[j]));
    }
  }
  o.require(worst < 1e-12, "scale invariance max diff " + fmt("%.2g", worst));
  const double secs = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
  o.require(secs < 1.0, "runtime " + fmt("%.3f s", secs));
  return o;
}

std::vector<double> draws(const LikelihoodModel& m, std::size_t n,
                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> out(n);
  for (double& x : out) x = draw(m, rng);
  return out;
}

Outcome distributions() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  struct Case {
    Family family;
    double loc, scale;
  };
  for (const Case& c : {Case{Family::kLogNormal, -0.4, 0.25},
                        Case{Family::kNormal, 0.7, 0.12},
                        Case{Family::kCauchy, 0.9, 0.08}}) {
    const auto truth = make_model(c.family, c.loc, c.scale);
    const auto m = fit(draws(truth, 100000, 7), c.family);
    const double err = std::max(std::abs(m.location() - c.loc),
                                std::abs(m.scale() - c.scale));
    o.require(err < 0.01, std::string(family_name(c.family)) + " recovery " +
                              fmt("%.1e", err));
    const double lo = c.family == Family::kLogNormal ? 0.0 : -1e300;
    const double mass = m.cdf(1e300) - m.cdf(lo);
    o.require(std::abs(mass - 1.0) < 1e-9, "mass " + fmt("%.12f", mass));
  }
  const double p =
      interval_probability(make_model(Family::kCauchy, 0, 1), 0.0, 1.0);
  o.require(std::abs(p - 0.5) < 1e-12, "Cauchy(0,1)[-1,1] " + fmt("%.15f", p));
  const double secs = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
  o.require(secs < 30.0, "runtime " + fmt("%.2f s", secs));
  return o;
}

Outcome bacon_oracle() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  SyntheticOracleSpec spec;
  spec.diagonals = {make_model(Family::kNormal, 0.55, 0.12),
                    make_model(Family::kLogNormal, std::log(0.8), 0.15),
                    make_model(Family::kNormal, 1.0, 0.1)};
  spec.priors = {0.3, 0.2, 0.5};
  spec.n_samples = 100000;

  spec.seed = 1;
  const auto validation = generate_synthetic(spec);
  spec.seed = 2;
  spec.n_samples = 20000;
  const auto holdout = generate_synthetic(spec);
  spec.seed = 3;
  spec.n_samples = 100000;
  const auto test = generate_synthetic(spec);

  LikelihoodTable table = build_likelihood_table(validation.angles, 3);
  const ClassWeights w(spec.priors);
  const auto cal = calibrate_delta(table, w, holdout.angles);
  const auto r = bacon_confidences(test.angles, table, w);
  double diff = 0;
  for (std::size_t i = 0; i < test.angles.size(); ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      diff += std::abs(r.confidences.row(i)[j] - test.posterior(i, j));
    }
  }
  diff /= static_cast<double>(test.angles.size() * 3);
  o.require(diff < 1e-2, "mean |BACON - analytic| " + fmt("%.2e", diff) +
                             " at delta " + fmt("%.3g", cal.delta));
  const double e = ece(r.confidences, 2).ece;
  const double e10 = ece(r.confidences, 10).ece;
  o.require(e < 0.02, "ECE(M=K-1) " + fmt("%.4f", e));
  o.require(e10 < 0.02, "ECE(M=10) " + fmt("%.4f", e10));

  double scale_diff = 0;
  for (double c : {1e-3, 3.0, 1e5}) {
    const ClassWeights scaled({0.3 * c, 0.2 * c, 0.5 * c});
    const auto s = bacon_confidences(test.angles, table, scaled);
    for (std::size_t i = 0; i < test.angles.size(); ++i) {
      for (std::size_t j = 0; j < 3; ++j) {
        scale_diff = std::max(scale_diff, std::abs(s.confidences.row(i)[j] -
                                                   r.confidences.row(i)[j]));
      }
    }
  }
  o.require(scale_diff < 1e-12, "weight scaling " + fmt("%.1e", scale_diff));

  const auto uni = bacon_confidences(test.angles, table, ClassWeights::uniform(3));
  const auto same =
      bacon_confidences(test.angles, table, ClassWeights({0.4, 0.4, 0.4}));
  bool exact = uni.confidences.probs() == same.confidences.probs();
  const double delta = *table.delta();
  double direct_diff = 0;
  for (std::size_t i = 0; i < test.angles.size(); ++i) {
    double l[3], s = 0;
    for (std::size_t j = 0; j < 3; ++j) {
      s += l[j] = interval_probability(table.diagonal(j),
                                       test.angles[i].angles[j], delta);
    }
    if (s == 0) continue;
    for (std::size_t j = 0; j < 3; ++j) {
      direct_diff = std::max(direct_diff,
                             std::abs(uni.confidences.row(i)[j] - l[j] / s));
    }
  }
  o.require(exact && direct_diff < 1e-12,
            "uniform reduction exact, vs direct " + fmt("%.1e", direct_diff));
  const double secs = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
  o.require(secs < 60.0, "runtime " + fmt("%.2f s", secs));
  return o;
}

Outcome metric_oracles() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const double conf[] = {0.9, 0.9, 0.6};
  const bool correct[] = {true, true, false};
  const double e3 = ece(bin_predictions(conf, correct, 2));
  o.require(std::abs(e3 - 0.1333) < 1e-4, "3-sample ECE " + fmt("%.4f", e3));

  const ConfidenceMatrix two(Matrix(4, 2, {0.9, 0.1, 0.8, 0.2, 0.2, 0.8, 0.1, 0.9}),
                             {0, 0, 1, 1}, EstimatorTag::kSoftmax);
  const double a2 = ace(two, 2, 0.001).ace;
  o.require(std::abs(a2 - 0.15) < 1e-9, "K=2 ACE " + fmt("%.12f", a2));

  std::mt19937_64 rng(3);
  std::size_t violations = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 20 + rng() % 300, k = 2 + rng() % 9;
    std::normal_distribution<double> g(0, 0.5 + static_cast<double>(t % 7));
    Matrix p(n, k);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < k; ++j) s += p(i, j) = std::exp(g(rng));
      for (std::size_t j = 0; j < k; ++j) p(i, j) /= s;
      labels[i] = static_cast<int>(rng() % k);
    }
    const ConfidenceMatrix cm(std::move(p), std::move(labels),
                              EstimatorTag::kSoftmax);
    const auto r = ece(cm, 1 + rng() % 15);
    if (r.ece > mce(r.binning).mce + 1e-15) ++violations;
  }
  o.require(violations == 0,
            "ECE <= MCE on 1000 matrices, violations " +
                std::to_string(violations));

  const auto sizes = constant_frequency_sizes(6669, 9);
  bool all741 = sizes.size() == 9;
  for (auto s : sizes) all741 = all741 && s == 741;
  o.require(all741, "6669 / 9 ranges = 741 each");
  const double secs = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
  o.require(secs < 10.0, "runtime " + fmt("%.2f s", secs));
  return o;
}

Outcome skewed_sampler() {
  Outcome o;
  auto spec = SyntheticClassifierSpec::low_accuracy();
  spec.validation_per_class = 1;
  spec.holdout_per_class = 1;
  const auto pool = generate_synthetic_classifier(spec, 11).test;
  const auto a = sample_imbalanced(pool, ImbalanceSpec::cat_dog_skew(5));
  const auto b = sample_imbalanced(pool, ImbalanceSpec::cat_dog_skew(5));
  std::vector<std::size_t> counts(10, 0);
  for (int y : a.labels()) ++counts[static_cast<std::size_t>(y)];
  bool ok = counts[3] == 333 && counts[5] == 1000;
  for (std::size_t c = 0; c < 10; ++c) {
    if (c != 3 && c != 5) ok = ok && counts[c] == 667;
  }
  o.require(ok, "counts {333, 1000, 8 x 667}");
  o.require(a.num_samples() == 6669,
            "total " + std::to_string(a.num_samples()));
  o.require(a.sample_ids() == b.sample_ids(), "deterministic under seed");
  return o;
}

std::vector<LogitRecord> calibrated_logits(std::size_t n, std::size_t k,
                                           double spread, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, spread);
  std::vector<LogitRecord> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = out[i];
    r.logits.resize(k);
    std::vector<double> p(k);
    for (std::size_t j = 0; j < k; ++j) p[j] = std::exp(r.logits[j] = g(rng));
    std::discrete_distribution<int> pick(p.begin(), p.end());
    r.label = pick(rng);
    r.sample_id = static_cast<std::int64_t>(i);
  }
  return out;
}

Outcome temperature() {
  Outcome o;
  std::size_t worse = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    std::mt19937_64 rng(1000 + s);
    const std::size_t k = 2 + rng() % 9;
    auto hold = calibrated_logits(100 + rng() % 400, k,
                                  0.2 + static_cast<double>(rng() % 50) / 10.0,
                                  s);
    // Random rescaling and label noise so beta = 1 is rarely optimal.
    const double inflate = std::exp(std::uniform_real_distribution<double>(-1.5, 1.5)(rng));
    for (auto& r : hold) {
      for (double& v : r.logits) v *= inflate;
      if (rng() % 5 == 0) r.label = static_cast<int>(rng() % k);
    }
    const auto t = fit_temperature(hold);
    if (t.nll_holdout > mean_nll(hold, 1.0)) ++worse;
  }
  o.require(worse == 0, "NLL(beta*) <= NLL(1) on 100 sets, violations " +
                            std::to_string(worse));

  const auto calibrated = calibrated_logits(20000, 6, 2.0, 77);
  const double beta = fit_temperature(calibrated).beta;
  o.require(std::abs(beta - 1.0) < 0.05, "calibrated beta* " + fmt("%.4f", beta));

  const auto rows = calibrated_logits(10000, 10, 3.0, 78);
  const auto plain = softmax(rows, 1.0);
  const auto scaled = softmax(rows, 0.37);
  std::size_t flips = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    flips += plain.predicted(i) != scaled.predicted(i) ? 1 : 0;
  }
  o.require(flips == 0, "argmax invariant on 1e4 rows");
  return o;
}

// Both qualitative criteria share one set of runs: 30 seeds in each regime.
struct RegimeRuns {
  std::vector<SeedRun> low, high;
};

RegimeRuns run_regimes() {
  RegimeRuns out;
  ExperimentConfig cfg;
  cfg.imbalance = ImbalanceSpec::cat_dog_skew(0).counts;
  cfg.jobs = 4;
  for (std::uint64_t s = 1; s <= 30; ++s) cfg.seeds.push_back(s);
  cfg.synthetic = SyntheticClassifierSpec::low_accuracy();
  out.low = run_experiment(cfg);
  cfg.synthetic = SyntheticClassifierSpec::high_accuracy();
  out.high = run_experiment(cfg);
  return out;
}

Outcome qualitative_trend(const RegimeRuns& runs) {
  Outcome o;
  std::vector<double> softmax_ece, softmax_acc, softmax_ace, bacon_ace;
  for (const auto* regime : {&runs.low, &runs.high}) {
    const std::size_t k = 10;
    std::vector<double> e(k), acc(k), sa(k), ba(k), overall(2);
    double n = 0;
    for (const auto& run : *regime) {
      if (!run.ok) continue;
      n += 1;
      const auto& s = run.reports.at(EstimatorTag::kSoftmax);
      const auto& b = run.reports.at(EstimatorTag::kBacon);
      overall[0] += s.accuracy;
      for (std::size_t c = 0; c < k; ++c) {
        e[c] += s.per_class.classes[c].ece;
        acc[c] += s.per_class.classes[c].accuracy;
        sa[c] += s.per_class.classes[c].ace;
        ba[c] += b.per_class.classes[c].ace;
      }
    }
    for (std::size_t c = 0; c < k; ++c) {
      softmax_ece.push_back(e[c] / n);
      softmax_acc.push_back(acc[c] / n);
      softmax_ace.push_back(sa[c] / n);
      bacon_ace.push_back(ba[c] / n);
    }
    o.require(true, std::string(regime == &runs.low ? "low" : "high") +
                        " regime softmax accuracy " +
                        fmt("%.3f", overall[0] / n));
  }
  const double rho = spearman(softmax_ece, softmax_acc);
  const double p = spearman_permutation_p_value(softmax_ece, softmax_acc,
                                                Alternative::kLess, 20000, 1);
  o.require(rho < 0 && p < 0.05, "softmax class ECE vs accuracy rho " +
                                     fmt("%.3f", rho) + " p " + fmt("%.2g", p) +
                                     " over " +
                                     std::to_string(softmax_ece.size()) +
                                     " class points");
  const double sd_s = *sample_std(softmax_ace);
  const double sd_b = *sample_std(bacon_ace);
  o.require(sd_b < sd_s, "class ACE spread BACON " + fmt("%.4f", sd_b) +
                             " < softmax " + fmt("%.4f", sd_s));
  return o;
}

Outcome mce_variability(const RegimeRuns& runs) {
  Outcome o;
  std::vector<double> sparse, dense;
  for (const auto* regime : {&runs.low, &runs.high}) {
    for (const auto& run : *regime) {
      if (!run.ok) continue;
      for (const auto& [tag, r] : run.reports) {
        if (r.mce_bin_frequency < 100) sparse.push_back(r.mce);
        if (r.mce_bin_frequency > 500) dense.push_back(r.mce);
      }
    }
  }
  const auto vs = sample_variance(sparse);
  const auto vd = sample_variance(dense);
  o.require(vs && vd, "runs with frequency < 100: " +
                          std::to_string(sparse.size()) + ", > 500: " +
                          std::to_string(dense.size()));
  if (vs && vd) {
    o.require(*vs > *vd, "var(MCE) " + fmt("%.3g", *vs) + " > " +
                             fmt("%.3g", *vd));
  }
  return o;
}

Outcome determinism() {
  Outcome o;
  ExperimentConfig cfg;
  auto spec = SyntheticClassifierSpec::low_accuracy();
  cfg.synthetic = spec;
  cfg.seeds = {0, 1, 2, 3, 4};
  cfg.holdout_seed = 0;
  cfg.imbalance = ImbalanceSpec::cat_dog_skew(0).counts;
  const auto first = content_hash(aggregate_to_json(aggregate(run_experiment(cfg))));
  const auto again = content_hash(aggregate_to_json(aggregate(run_experiment(cfg))));
  cfg.jobs = 4;
  const auto parallel =
      content_hash(aggregate_to_json(aggregate(run_experiment(cfg))));
  o.require(first == again, "re-run hash " + first);
  o.require(first == parallel, "4 jobs hash " + parallel);
#ifdef BACON_CLI_PATH
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "bacon_acceptance_cli";
  fs::remove_all(dir);
  write_text_file(dir / "config.json", R"({
    "seeds": {"first": 0, "count": 5},
    "holdout_seed": 0,
    "synthetic": {"preset": "low"},
    "imbalance": "cat_dog_skew",
    "output_dir": "out"
  })");
  auto run_cli = [&] {
    const std::string cmd = std::string(BACON_CLI_PATH) +
                            " experiment --config " +
                            (dir / "config.json").string();
    std::string out;
    if (FILE* pipe = popen(cmd.c_str(), "r")) {
      char buf[256];
      while (std::fgets(buf, sizeof(buf), pipe)) out += buf;
      if (pclose(pipe) != 0) out = "exit status nonzero";
    }
    return out;
  };
  const std::string h1 = run_cli();
  const std::string file1 = content_hash(read_text_file(dir / "out/aggregate.json"));
  const std::string h2 = run_cli();
  const std::string file2 = content_hash(read_text_file(dir / "out/aggregate.json"));
  o.require(!h1.empty() && h1 == h2 && file1 == file2,
            "CLI experiment re-run hash " + file1);
  fs::remove_all(dir);
#endif
  return o;
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](const char* name, const std::function<Outcome()>& check) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
    std::printf("[%s] %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  };

  report("geometry", geometry);
  report("distribution MLE", distributions);
  report("BACON oracle equivalence", bacon_oracle);
  report("metric hand oracles", metric_oracles);
  report("imbalanced sampler", skewed_sampler);
  report("temperature scaling", temperature);
  RegimeRuns runs;
  report("qualitative trend", [&] {
    runs = run_regimes();
    return qualitative_trend(runs);
  });
  report("MCE variability", [&] { return mce_variability(runs); });
  report("experiment determinism", determinism);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
