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

#ifndef BACON_CSV_IO_H_
#define BACON_CSV_IO_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bacon/confidence.h"
#include "bacon/geometry.h"

namespace bacon {

// Shortest decimal string that round-trips to the same double.
std::string format_double(double value);

// sample_id,label,phi_0..phi_{K-1}
std::string angles_to_csv(const std::vector<AngleRecord>& records);
std::vector<AngleRecord> angles_from_csv(const std::string& text);

// sample_id,label,p_0..p_{K-1}
std::string confidences_to_csv(const ConfidenceMatrix& confidences,
                               const std::vector<std::int64_t>& sample_ids);

struct LoadedConfidences {
  ConfidenceMatrix confidences;
  std::vector<std::int64_t> sample_ids;
};
// Throws FormatError on a malformed file, ValidationError on invalid rows.
LoadedConfidences confidences_from_csv(const std::string& text,
                                       EstimatorTag tag);

}  // namespace bacon

#endif  // BACON_CSV_IO_H_
