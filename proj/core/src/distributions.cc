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

#include "bacon/distributions.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "bacon/errors.h"

namespace bacon {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kPi = std::numbers::pi;
const double kLogSqrt2Pi = 0.5 * std::log(2.0 * kPi);

constexpr int kCauchyMaxIterations = 200;
constexpr double kCauchyTolerance = 1e-10;
constexpr int kCauchyGridPoints = 101;
constexpr int kMaxHalvings = 60;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }
double normal_sf(double z) { return 0.5 * std::erfc(z / kSqrt2); }

void check_finite(std::span<const double> samples) {
  for (double x : samples) {
    if (!std::isfinite(x)) throw DomainError("non-finite sample");
  }
}

void check_size(std::span<const double> samples) {
  if (samples.size() < kMinFitSize) {
    throw InsufficientDataError(
        InsufficientDataError::Reason::kTooFewSamples,
        "fit needs at least " + std::to_string(kMinFitSize) +
            " samples, got " + std::to_string(samples.size()));
  }
}

void check_spread(std::span<const double> samples) {
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  if (*lo == *hi) {
    throw InsufficientDataError(
        InsufficientDataError::Reason::kDegenerateSpread,
        "samples have zero spread; no valid scale parameter");
  }
}

struct MeanStd {
  double mean;
  double std;
};

// MLE (population) mean and standard deviation, two-pass.
MeanStd moments(std::span<const double> xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size()))};
}

double total_log_likelihood(const LikelihoodModel& m,
                            std::span<const double> xs) {
  double ll = 0.0;
  for (double x : xs) ll += m.log_pdf(x);
  return ll;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double cauchy_log_likelihood(std::span<const double> xs, double x0,
                             double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(x0)) return -kInf;
  const double g2 = gamma * gamma;
  double s = 0.0;
  for (double x : xs) s += std::log(g2 + (x - x0) * (x - x0));
  const double n = static_cast<double>(xs.size());
  return n * std::log(gamma) - n * std::log(kPi) - s;
}

struct CauchyFit {
  double x0;
  double gamma;
  double log_likelihood;
  bool converged;
};

// Takes `step` along a 1-D direction, halving until the likelihood does not
// decrease. Returns the accepted step (0 if none).
template <typename Eval>
double backtrack(double step, double current, Eval&& eval) {
  for (int h = 0; h < kMaxHalvings && step != 0.0; ++h, step *= 0.5) {
    const double ll = eval(step);
    if (std::isfinite(ll) && ll >= current) return step;
  }
  return 0.0;
}

// Alternating 1-D Newton: location with scale fixed, then log-scale with
// location fixed. The log-scale subproblem is strictly concave.
CauchyFit cauchy_newton(std::span<const double> xs, double x0, double gamma) {
  const double n = static_cast<double>(xs.size());
  double ll = cauchy_log_likelihood(xs, x0, gamma);
  for (int iter = 0; iter < kCauchyMaxIterations; ++iter) {
    if (!std::isfinite(ll)) break;

    const double g2 = gamma * gamma;
    double grad = 0.0;
    double hess = 0.0;
    for (double x : xs) {
      const double d = x - x0;
      const double q = g2 + d * d;
      grad += 2.0 * d / q;
      hess += 2.0 * (d * d - g2) / (q * q);
    }
    double step = hess < 0.0 ? -grad / hess
                             : std::copysign(0.5 * gamma, grad);
    if (grad == 0.0) step = 0.0;
    step = backtrack(step, ll, [&](double s) {
      return cauchy_log_likelihood(xs, x0 + s, gamma);
    });
    const double dx = step;
    x0 += dx;
    ll = cauchy_log_likelihood(xs, x0, gamma);

    double ugrad = n;
    double uhess = 0.0;
    for (double x : xs) {
      const double d2 = (x - x0) * (x - x0);
      const double q = g2 + d2;
      ugrad -= 2.0 * g2 / q;
      uhess -= 4.0 * g2 * d2 / (q * q);
    }
    double ustep = uhess < 0.0 ? -ugrad / uhess : 0.0;
    ustep = std::clamp(ustep, -2.0, 2.0);
    ustep = backtrack(ustep, ll, [&](double s) {
      return cauchy_log_likelihood(xs, x0, gamma * std::exp(s));
    });
    const double new_gamma = gamma * std::exp(ustep);
    const double dg = new_gamma - gamma;
    gamma = new_gamma;
    ll = cauchy_log_likelihood(xs, x0, gamma);

    if (std::abs(dx) < kCauchyTolerance && std::abs(dg) < kCauchyTolerance) {
      return {x0, gamma, ll, std::isfinite(ll)};
    }
  }
  return {x0, gamma, ll, false};
}

CauchyFit cauchy_grid(std::span<const double> xs, double lo, double hi) {
  const double range = hi - lo;
  CauchyFit best{lo, range, -kInf, false};
  for (int i = 0; i < kCauchyGridPoints; ++i) {
    const double x0 = lo + range * i / (kCauchyGridPoints - 1);
    for (int k = 1; k <= kCauchyGridPoints; ++k) {
      const double gamma = range * k / kCauchyGridPoints;
      const double ll = cauchy_log_likelihood(xs, x0, gamma);
      if (ll > best.log_likelihood) best = {x0, gamma, ll, false};
    }
  }
  return best;
}

CauchyFit fit_cauchy(std::span<const double> xs) {
  std::vector<double> sorted(xs.begin(), xs.end());
  std::sort(sorted.begin(), sorted.end());
  const double median = quantile_sorted(sorted, 0.5);
  double half_iqr =
      0.5 * (quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25));
  const double range = sorted.back() - sorted.front();
  if (!(half_iqr > 0.0)) half_iqr = range / static_cast<double>(xs.size());

  CauchyFit result = cauchy_newton(xs, median, half_iqr);
  if (result.converged) return result;

  // Newton diverged or stalled: fall back to a coarse global grid, polish
  // from its optimum and keep whichever candidate is best.
  CauchyFit grid = cauchy_grid(xs, sorted.front(), sorted.back());
  CauchyFit polished = cauchy_newton(xs, grid.x0, grid.gamma);
  for (const CauchyFit& c : {result, polished}) {
    if (std::isfinite(c.log_likelihood) && c.gamma > 0.0 &&
        c.log_likelihood > grid.log_likelihood) {
      grid = c;
    }
  }
  return grid;
}

}  // namespace

std::string_view family_name(Family family) {
  switch (family) {
    case Family::kNormal: return "normal";
    case Family::kLogNormal: return "lognormal";
    case Family::kCauchy: return "cauchy";
  }
  return "?";
}

Family parse_family(std::string_view name) {
  for (Family f : kAllFamilies) {
    if (family_name(f) == name) return f;
  }
  throw ConfigError("unknown distribution family '" + std::string(name) + "'");
}

LikelihoodModel make_model(Family family, double location, double scale) {
  if (!std::isfinite(location) || !std::isfinite(scale) || !(scale > 0.0)) {
    throw ConfigError("invalid " + std::string(family_name(family)) +
                      " parameters (" + std::to_string(location) + ", " +
                      std::to_string(scale) + ")");
  }
  LikelihoodModel m;
  m.family = family;
  m.params = {location, scale};
  return m;
}

double LikelihoodModel::log_pdf(double x) const {
  const double loc = params[0];
  const double s = params[1];
  switch (family) {
    case Family::kNormal: {
      const double z = (x - loc) / s;
      return -0.5 * z * z - std::log(s) - kLogSqrt2Pi;
    }
    case Family::kLogNormal: {
      if (!(x > 0.0)) return -kInf;
      const double lx = std::log(x);
      const double z = (lx - loc) / s;
      return -0.5 * z * z - std::log(s) - lx - kLogSqrt2Pi;
    }
    case Family::kCauchy: {
      const double z = (x - loc) / s;
      return -std::log(kPi * s) - std::log1p(z * z);
    }
  }
  return -kInf;
}

double LikelihoodModel::pdf(double x) const { return std::exp(log_pdf(x)); }

double LikelihoodModel::cdf(double x) const {
  const double loc = params[0];
  const double s = params[1];
  switch (family) {
    case Family::kNormal:
      return normal_cdf((x - loc) / s);
    case Family::kLogNormal:
      if (!(x > 0.0)) return 0.0;
      return normal_cdf((std::log(x) - loc) / s);
    case Family::kCauchy:
      return std::atan2(s, loc - x) / kPi;
  }
  return 0.0;
}

double LikelihoodModel::sf(double x) const {
  const double loc = params[0];
  const double s = params[1];
  switch (family) {
    case Family::kNormal:
      return normal_sf((x - loc) / s);
    case Family::kLogNormal:
      if (!(x > 0.0)) return 1.0;
      return normal_sf((std::log(x) - loc) / s);
    case Family::kCauchy:
      return std::atan2(s, x - loc) / kPi;
  }
  return 0.0;
}

double LikelihoodModel::median() const {
  return family == Family::kLogNormal ? std::exp(params[0]) : params[0];
}

double LikelihoodModel::support_min() const {
  return family == Family::kLogNormal ? 0.0 : -kInf;
}

LikelihoodModel fit(std::span<const double> samples, Family family) {
  check_size(samples);
  check_finite(samples);

  LikelihoodModel m;
  m.family = family;
  m.n_samples = samples.size();
  switch (family) {
    case Family::kNormal: {
      check_spread(samples);
      const auto [mean, std] = moments(samples);
      m.params = {mean, std};
      break;
    }
    case Family::kLogNormal: {
      std::vector<double> logs(samples.size());
      for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!(samples[i] > 0.0)) {
          throw DomainError("lognormal fit requires positive samples, got " +
                            std::to_string(samples[i]));
        }
        logs[i] = std::log(samples[i]);
      }
      check_spread(logs);
      const auto [mean, std] = moments(logs);
      m.params = {mean, std};
      break;
    }
    case Family::kCauchy: {
      check_spread(samples);
      const CauchyFit c = fit_cauchy(samples);
      if (!std::isfinite(c.log_likelihood) || !(c.gamma > 0.0)) {
        throw InsufficientDataError(
            InsufficientDataError::Reason::kDegenerateSpread,
            "cauchy fit did not reach a finite likelihood");
      }
      m.params = {c.x0, c.gamma};
      break;
    }
  }
  if (!(m.params[1] > 0.0)) {
    throw InsufficientDataError(
        InsufficientDataError::Reason::kDegenerateSpread,
        "fitted scale parameter is not positive");
  }
  m.log_likelihood = total_log_likelihood(m, samples);
  return m;
}

LikelihoodModel select_family(std::span<const double> samples) {
  check_size(samples);

  std::vector<LikelihoodModel> fitted;
  std::string failures;
  for (Family f : kAllFamilies) {
    try {
      fitted.push_back(fit(samples, f));
    } catch (const Error& e) {
      failures += std::string(family_name(f)) + ": " + e.what() + "; ";
    }
  }
  if (fitted.empty()) throw NoModelError("no family could be fitted: " + failures);

  // Strict comparison keeps the earlier family on exact ties.
  std::size_t best = 0;
  for (std::size_t i = 1; i < fitted.size(); ++i) {
    if (fitted[i].log_likelihood > fitted[best].log_likelihood) best = i;
  }
  LikelihoodModel winner = fitted[best];
  for (std::size_t i = 0; i < fitted.size(); ++i) {
    if (i == best) continue;
    winner.runner_up[std::string(family_name(fitted[i].family))] =
        winner.log_likelihood - fitted[i].log_likelihood;
  }
  return winner;
}

double interval_probability(const LikelihoodModel& model, double phi,
                            double delta) {
  if (!(delta > 0.0)) throw ConfigError("delta must be positive");
  const double lo = std::max(phi - delta, model.support_min());
  const double hi = phi + delta;
  if (!(hi > lo)) return 0.0;
  // Difference the tail that is farther from 1 to avoid cancellation.
  const double p = phi >= model.median() ? model.sf(lo) - model.sf(hi)
                                         : model.cdf(hi) - model.cdf(lo);
  return std::clamp(p, 0.0, 1.0);
}

double log_interval_probability(const LikelihoodModel& model, double phi,
                                double delta) {
  const double p = interval_probability(model, phi, delta);
  if (p >= std::numeric_limits<double>::min()) return std::log(p);

  const double lo = std::max(phi - delta, model.support_min());
  const double hi = phi + delta;
  if (!(hi > lo)) return -kInf;
  const double edge = std::max(model.log_pdf(lo), model.log_pdf(hi));
  if (!std::isfinite(edge)) return -kInf;
  return edge + std::log(hi - lo);
}

double draw(const LikelihoodModel& model, std::mt19937_64& rng) {
  switch (model.family) {
    case Family::kNormal:
      return std::normal_distribution<double>(model.params[0],
                                              model.params[1])(rng);
    case Family::kLogNormal:
      return std::lognormal_distribution<double>(model.params[0],
                                                 model.params[1])(rng);
    case Family::kCauchy:
      return std::cauchy_distribution<double>(model.params[0],
                                              model.params[1])(rng);
  }
  return 0.0;
}

LikelihoodTable::LikelihoodTable(
    std::size_t num_classes, std::vector<std::optional<LikelihoodModel>> cells,
    std::optional<double> delta)
    : k_(num_classes), cells_(std::move(cells)) {
  if (cells_.size() != k_ * k_) {
    throw ConfigError("likelihood table needs K*K cells");
  }
  for (std::size_t j = 0; j < k_; ++j) {
    if (!cells_[j * k_ + j]) {
      throw ConfigError("likelihood table is missing diagonal cell " +
                        std::to_string(j));
    }
  }
  if (delta) set_delta(*delta);
}

const LikelihoodModel& LikelihoodTable::diagonal(std::size_t j) const {
  return *cells_.at(j * k_ + j);
}

const LikelihoodModel* LikelihoodTable::cell(std::size_t node,
                                             std::size_t label_class) const {
  const auto& c = cells_.at(node * k_ + label_class);
  return c ? &*c : nullptr;
}

double LikelihoodTable::require_delta() const {
  if (!delta_) throw CalibrationError("likelihood table has no delta set");
  return *delta_;
}

void LikelihoodTable::set_delta(double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw ConfigError("delta must be positive and finite");
  }
  delta_ = delta;
}

LikelihoodTable build_likelihood_table(std::span<const AngleRecord> records,
                                       std::size_t num_classes,
                                       const TableOptions& options) {
  const std::size_t k = num_classes;
  // samples[node][label] collects node angles of samples with that label.
  std::vector<std::vector<std::vector<double>>> samples(
      k, std::vector<std::vector<double>>(k));
  for (const auto& r : records) {
    if (r.angles.size() != k) {
      throw ShapeError("angle record has " + std::to_string(r.angles.size()) +
                       " angles, expected " + std::to_string(k));
    }
    if (r.label < 0 || static_cast<std::size_t>(r.label) >= k) {
      throw ValidationError("angle record label out of range");
    }
    for (std::size_t j = 0; j < k; ++j) samples[j][r.label].push_back(r.angles[j]);
  }

  auto fit_cell = [&](std::span<const double> xs) {
    return options.family ? fit(xs, *options.family) : select_family(xs);
  };

  std::vector<std::optional<LikelihoodModel>> cells(k * k);
  for (std::size_t node = 0; node < k; ++node) {
    std::optional<LikelihoodModel> pooled;
    bool pooled_tried = false;
    for (std::size_t cls = 0; cls < k; ++cls) {
      auto& cell = cells[node * k + cls];
      if (cls == node) {
        cell = fit_cell(samples[node][cls]);
      } else {
        try {
          cell = fit_cell(samples[node][cls]);
        } catch (const Error&) {
          if (!pooled_tried) {
            pooled_tried = true;
            std::vector<double> all;
            for (std::size_t c = 0; c < k; ++c) {
              if (c == node) continue;
              all.insert(all.end(), samples[node][c].begin(),
                         samples[node][c].end());
            }
            try {
              pooled = fit_cell(all);
              pooled->pooled = true;
            } catch (const Error&) {
            }
          }
          cell = pooled;
        }
      }
      if (cell) {
        cell->node = static_cast<int>(node);
        cell->label_class = static_cast<int>(cls);
      }
    }
  }

  LikelihoodTable table(k, std::move(cells));
  table.metadata["truncation"] =
      "ignored: families fitted untruncated to angles on (0, pi/2]";
  table.metadata["selection"] =
      options.family ? "fixed:" + std::string(family_name(*options.family))
                     : "max-log-likelihood";
  return table;
}

}  // namespace bacon
