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

#ifndef BACON_GEOMETRY_H_
#define BACON_GEOMETRY_H_

#include <cstdint>
#include <span>
#include <vector>

#include "bacon/bundle_io.h"
#include "bacon/matrix.h"

namespace bacon {

// Per-sample angles between the decision vector and each class weight
// vector, in radians.
struct AngleRecord {
  std::vector<double> angles;
  int label = -1;
  std::int64_t sample_id = 0;
};

struct LogitRecord {
  std::vector<double> logits;
  int label = -1;
  std::int64_t sample_id = 0;
};

enum class AngleConvention {
  // arccos(|a.w| / (|a||w|)): anti-parallel maps to 0, range [0, pi/2].
  kAbsolute,
  // arccos(a.w / (|a||w|)): range [0, pi].
  kSigned,
};

// Angles for every (sample, class) pair. Labels are left at -1 and sample ids
// at the row index; attach real ones with `label_records`.
// Throws DegenerateVectorError on a zero-magnitude row and ShapeError when
// the inner dimensions disagree.
std::vector<AngleRecord> compute_angles(
    const Matrix& activations, const Matrix& weights,
    AngleConvention convention = AngleConvention::kAbsolute);

// Reconstructs logits a.w_j + b_j. When `reference` is given, every element
// must agree within kLogitTolerance or ConsistencyError is thrown.
inline constexpr double kLogitTolerance = 1e-4;
std::vector<LogitRecord> compute_logits(const Matrix& activations,
                                        const Matrix& weights,
                                        std::span<const double> biases = {},
                                        const Matrix* reference = nullptr);

template <typename Record>
void label_records(std::vector<Record>& records, std::span<const int> labels,
                   std::span<const std::int64_t> sample_ids) {
  if (labels.size() != records.size() || sample_ids.size() != records.size()) {
    throw ShapeError("label/sample id count does not match record count");
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].label = labels[i];
    records[i].sample_id = sample_ids[i];
  }
}

// Bundle conveniences: labels and sample ids attached, the bundle's own
// logits tensor (if any) used as a consistency reference.
std::vector<AngleRecord> angles_from_bundle(
    const TensorBundle& bundle,
    AngleConvention convention = AngleConvention::kAbsolute);
std::vector<LogitRecord> logits_from_bundle(const TensorBundle& bundle);

}  // namespace bacon

#endif  // BACON_GEOMETRY_H_
