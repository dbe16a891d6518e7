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

#ifndef BACON_SERIALIZATION_H_
#define BACON_SERIALIZATION_H_

#include <filesystem>
#include <string>
#include <string_view>

#include "bacon/distributions.h"
#include "bacon/harness.h"
#include "bacon/metrics.h"

namespace bacon {

// JSON text encodings of the toolkit's result types. Encoders are
// deterministic: equal inputs give byte-identical output. Decoders throw
// FormatError on malformed or schema-violating input.

std::string report_to_json(const CalibrationReport& report);
CalibrationReport report_from_json(std::string_view text);

std::string table_to_json(const LikelihoodTable& table);
LikelihoodTable table_from_json(std::string_view text);

std::string seed_run_to_json(const SeedRun& run);
SeedRun seed_run_from_json(std::string_view text);

std::string aggregate_to_json(const AggregateResult& result);
AggregateResult aggregate_from_json(std::string_view text);

// Relative bundle and output paths resolve against `base_dir`.
// Throws ConfigError on invalid settings.
ExperimentConfig experiment_config_from_json(
    std::string_view text, const std::filesystem::path& base_dir = {});

// Class weights from "uniform" or a JSON array.
ClassWeights class_weights_from_json(std::string_view text,
                                     std::size_t num_classes);

std::string read_text_file(const std::filesystem::path& path);
// Creates parent directories. Throws IoError.
void write_text_file(const std::filesystem::path& path,
                     const std::string& text);

// 64-bit FNV-1a digest as 16 hex digits, for content comparisons.
std::string content_hash(std::string_view bytes);

}  // namespace bacon

#endif  // BACON_SERIALIZATION_H_
