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

#ifndef BACON_BUNDLE_IO_H_
#define BACON_BUNDLE_IO_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bacon/matrix.h"

namespace bacon {

// A tensor bundle is a directory holding `manifest.json` plus one raw
// little-endian row-major payload file per tensor. It carries a classifier's
// decision-layer activations together with its output layer parameters.
//
// Required tensors: "activations" (N x D), "weights" (K x D), "labels" (N).
// Optional: "biases" (K), "logits" (N x K), "sample_ids" (N).

inline constexpr int kManifestVersion = 1;
inline constexpr std::string_view kManifestFile = "manifest.json";

enum class DType { kF32, kF64, kI64 };

std::string_view dtype_name(DType dtype);
// Throws FormatError on an unknown name.
DType parse_dtype(std::string_view name);
std::size_t dtype_size(DType dtype);

struct TensorEntry {
  std::string name;
  DType dtype = DType::kF64;
  std::vector<std::size_t> shape;
  std::string data_path;

  // Floating payloads are held promoted to f64; i64 payloads in `ints`.
  std::vector<double> values;
  std::vector<std::int64_t> ints;

  std::size_t element_count() const;
  bool is_floating() const { return dtype != DType::kI64; }
};

TensorEntry make_float_tensor(std::string name, std::vector<std::size_t> shape,
                              std::vector<double> values,
                              DType dtype = DType::kF64);
TensorEntry make_int_tensor(std::string name, std::vector<std::size_t> shape,
                            std::vector<std::int64_t> values);

struct TensorBundle {
  int manifest_version = kManifestVersion;
  std::vector<TensorEntry> tensors;
  std::map<std::string, std::string> metadata;

  const TensorEntry* find(std::string_view name) const;
  // Throws ValidationError when the tensor is absent.
  const TensorEntry& at(std::string_view name) const;
  // Replaces a tensor of the same name, or appends.
  void set(TensorEntry entry);

  std::size_t num_samples() const;
  std::size_t feature_dim() const;
  std::size_t num_classes() const;

  Matrix activations() const;
  Matrix weights() const;
  std::vector<int> labels() const;
  std::optional<std::vector<double>> biases() const;
  std::optional<Matrix> logits() const;
  // "sample_ids" when present, otherwise 0..N-1.
  std::vector<std::int64_t> sample_ids() const;
};

// Assembles a classifier export. Labels are stored as i64.
TensorBundle make_classifier_bundle(
    const Matrix& activations, const Matrix& weights,
    const std::vector<int>& labels,
    const std::optional<std::vector<double>>& biases = std::nullopt,
    const std::optional<Matrix>& logits = std::nullopt,
    DType float_dtype = DType::kF64);

// Checks every bundle invariant: unique names, required tensors, shape
// agreement, K >= 2, D >= 1, labels in [0, K), finite payloads.
// A bundle with N == 0 is accepted (an empty sample of a pool).
void validate_bundle(const TensorBundle& bundle);

TensorBundle read_bundle(const std::filesystem::path& dir);
void write_bundle(const TensorBundle& bundle, const std::filesystem::path& dir);

}  // namespace bacon

#endif  // BACON_BUNDLE_IO_H_
