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

#include "bacon/bundle_io.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>
#include <set>
#include <system_error>

#include "bacon/errors.h"
#include "json.hpp"

namespace bacon {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

template <typename T>
T to_little_endian(T value) {
  if constexpr (std::endian::native == std::endian::little) {
    return value;
  } else {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    std::reverse(std::begin(bytes), std::end(bytes));
    std::memcpy(&value, bytes, sizeof(T));
    return value;
  }
}

template <typename T>
T load_le(const unsigned char* p) {
  T value;
  std::memcpy(&value, p, sizeof(T));
  return to_little_endian(value);
}

template <typename T>
void store_le(T value, std::string& out) {
  value = to_little_endian(value);
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.append(bytes, sizeof(T));
}

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

void expect_rank(const TensorEntry& t, std::size_t rank) {
  if (t.shape.size() != rank) {
    throw ValidationError("tensor '" + t.name + "' must have rank " +
                          std::to_string(rank) + ", got shape " +
                          shape_string(t.shape));
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IntegrityError("cannot open data file " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

void decode_payload(TensorEntry& t, const std::string& bytes) {
  const std::size_t count = t.element_count();
  const std::size_t expected = count * dtype_size(t.dtype);
  if (bytes.size() != expected) {
    throw IntegrityError("tensor '" + t.name + "' data file holds " +
                         std::to_string(bytes.size()) + " bytes, shape " +
                         shape_string(t.shape) + " requires " +
                         std::to_string(expected));
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  switch (t.dtype) {
    case DType::kF32:
      t.values.resize(count);
      for (std::size_t i = 0; i < count; ++i) {
        t.values[i] = static_cast<double>(load_le<float>(p + 4 * i));
      }
      break;
    case DType::kF64:
      t.values.resize(count);
      for (std::size_t i = 0; i < count; ++i) {
        t.values[i] = load_le<double>(p + 8 * i);
      }
      break;
    case DType::kI64:
      t.ints.resize(count);
      for (std::size_t i = 0; i < count; ++i) {
        t.ints[i] = load_le<std::int64_t>(p + 8 * i);
      }
      break;
  }
}

std::string encode_payload(const TensorEntry& t) {
  std::string out;
  out.reserve(t.element_count() * dtype_size(t.dtype));
  switch (t.dtype) {
    case DType::kF32:
      for (double v : t.values) store_le(static_cast<float>(v), out);
      break;
    case DType::kF64:
      for (double v : t.values) store_le(v, out);
      break;
    case DType::kI64:
      for (std::int64_t v : t.ints) store_le(v, out);
      break;
  }
  return out;
}

void check_payload_size(const TensorEntry& t) {
  const std::size_t held = t.is_floating() ? t.values.size() : t.ints.size();
  if (held != t.element_count()) {
    throw ValidationError("tensor '" + t.name + "' holds " +
                          std::to_string(held) + " elements, shape " +
                          shape_string(t.shape) + " requires " +
                          std::to_string(t.element_count()));
  }
}

// Rejects absolute paths and parent traversal so a manifest cannot point
// outside its bundle directory.
void check_data_path(const TensorEntry& t) {
  const fs::path p(t.data_path);
  if (t.data_path.empty() || p.is_absolute()) {
    throw FormatError("tensor '" + t.name + "' has invalid data_path '" +
                      t.data_path + "'");
  }
  for (const auto& part : p) {
    if (part == "..") {
      throw FormatError("tensor '" + t.name + "' data_path escapes bundle");
    }
  }
}

}  // namespace

std::string_view dtype_name(DType dtype) {
  switch (dtype) {
    case DType::kF32: return "f32";
    case DType::kF64: return "f64";
    case DType::kI64: return "i64";
  }
  return "?";
}

DType parse_dtype(std::string_view name) {
  if (name == "f32") return DType::kF32;
  if (name == "f64") return DType::kF64;
  if (name == "i64") return DType::kI64;
  throw FormatError("unknown dtype '" + std::string(name) + "'");
}

std::size_t dtype_size(DType dtype) { return dtype == DType::kF32 ? 4 : 8; }

std::size_t TensorEntry::element_count() const { return shape_product(shape); }

TensorEntry make_float_tensor(std::string name, std::vector<std::size_t> shape,
                              std::vector<double> values, DType dtype) {
  if (dtype == DType::kI64) {
    throw ValidationError("make_float_tensor requires a floating dtype");
  }
  TensorEntry t;
  t.data_path = name + ".bin";
  t.name = std::move(name);
  t.dtype = dtype;
  t.shape = std::move(shape);
  t.values = std::move(values);
  check_payload_size(t);
  return t;
}

TensorEntry make_int_tensor(std::string name, std::vector<std::size_t> shape,
                            std::vector<std::int64_t> values) {
  TensorEntry t;
  t.data_path = name + ".bin";
  t.name = std::move(name);
  t.dtype = DType::kI64;
  t.shape = std::move(shape);
  t.ints = std::move(values);
  check_payload_size(t);
  return t;
}

const TensorEntry* TensorBundle::find(std::string_view name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

const TensorEntry& TensorBundle::at(std::string_view name) const {
  if (const auto* t = find(name)) return *t;
  throw ValidationError("bundle is missing required tensor '" +
                        std::string(name) + "'");
}

void TensorBundle::set(TensorEntry entry) {
  for (auto& t : tensors) {
    if (t.name == entry.name) {
      t = std::move(entry);
      return;
    }
  }
  tensors.push_back(std::move(entry));
}

std::size_t TensorBundle::num_samples() const {
  return at("labels").element_count();
}

std::size_t TensorBundle::feature_dim() const {
  const auto& w = at("weights");
  expect_rank(w, 2);
  return w.shape[1];
}

std::size_t TensorBundle::num_classes() const {
  const auto& w = at("weights");
  expect_rank(w, 2);
  return w.shape[0];
}

Matrix TensorBundle::activations() const {
  const auto& a = at("activations");
  expect_rank(a, 2);
  return Matrix(a.shape[0], a.shape[1], a.values);
}

Matrix TensorBundle::weights() const {
  const auto& w = at("weights");
  expect_rank(w, 2);
  return Matrix(w.shape[0], w.shape[1], w.values);
}

std::vector<int> TensorBundle::labels() const {
  const auto& l = at("labels");
  return std::vector<int>(l.ints.begin(), l.ints.end());
}

std::optional<std::vector<double>> TensorBundle::biases() const {
  if (const auto* b = find("biases")) return b->values;
  return std::nullopt;
}

std::optional<Matrix> TensorBundle::logits() const {
  if (const auto* z = find("logits")) {
    expect_rank(*z, 2);
    return Matrix(z->shape[0], z->shape[1], z->values);
  }
  return std::nullopt;
}

std::vector<std::int64_t> TensorBundle::sample_ids() const {
  if (const auto* ids = find("sample_ids")) return ids->ints;
  std::vector<std::int64_t> ids(num_samples());
  std::iota(ids.begin(), ids.end(), std::int64_t{0});
  return ids;
}

TensorBundle make_classifier_bundle(
    const Matrix& activations, const Matrix& weights,
    const std::vector<int>& labels,
    const std::optional<std::vector<double>>& biases,
    const std::optional<Matrix>& logits, DType float_dtype) {
  TensorBundle b;
  b.set(make_float_tensor("activations",
                          {activations.rows(), activations.cols()},
                          activations.data(), float_dtype));
  b.set(make_float_tensor("weights", {weights.rows(), weights.cols()},
                          weights.data(), float_dtype));
  b.set(make_int_tensor("labels", {labels.size()},
                        std::vector<std::int64_t>(labels.begin(),
                                                  labels.end())));
  if (biases) {
    b.set(make_float_tensor("biases", {biases->size()}, *biases, float_dtype));
  }
  if (logits) {
    b.set(make_float_tensor("logits", {logits->rows(), logits->cols()},
                            logits->data(), float_dtype));
  }
  return b;
}

void validate_bundle(const TensorBundle& bundle) {
  if (bundle.manifest_version != kManifestVersion) {
    throw FormatError("unsupported manifest_version " +
                      std::to_string(bundle.manifest_version));
  }
  std::set<std::string> names;
  for (const auto& t : bundle.tensors) {
    if (!names.insert(t.name).second) {
      throw ValidationError("duplicate tensor name '" + t.name + "'");
    }
    check_payload_size(t);
    for (double v : t.values) {
      if (!std::isfinite(v)) {
        throw ValidationError("tensor '" + t.name +
                              "' contains a non-finite value");
      }
    }
  }

  const auto& acts = bundle.at("activations");
  const auto& weights = bundle.at("weights");
  const auto& labels = bundle.at("labels");
  expect_rank(acts, 2);
  expect_rank(weights, 2);
  expect_rank(labels, 1);
  if (!acts.is_floating() || !weights.is_floating()) {
    throw ValidationError("activations and weights must be floating point");
  }
  if (labels.is_floating()) {
    throw ValidationError("labels must be i64");
  }

  const std::size_t n = acts.shape[0];
  const std::size_t d = acts.shape[1];
  const std::size_t k = weights.shape[0];
  if (d < 1) throw ValidationError("decision layer width D must be >= 1");
  if (k < 2) throw ValidationError("class count K must be >= 2");
  if (weights.shape[1] != d) {
    throw ValidationError("weights shape " + shape_string(weights.shape) +
                          " disagrees with activations " +
                          shape_string(acts.shape));
  }
  if (labels.shape[0] != n) {
    throw ValidationError("labels length " + std::to_string(labels.shape[0]) +
                          " != N " + std::to_string(n));
  }
  for (std::int64_t y : labels.ints) {
    if (y < 0 || static_cast<std::size_t>(y) >= k) {
      throw ValidationError("label " + std::to_string(y) +
                            " outside [0, " + std::to_string(k) + ")");
    }
  }
  if (const auto* b = bundle.find("biases")) {
    expect_rank(*b, 1);
    if (b->shape[0] != k || !b->is_floating()) {
      throw ValidationError("biases must be a floating vector of length K");
    }
  }
  if (const auto* z = bundle.find("logits")) {
    expect_rank(*z, 2);
    if (z->shape[0] != n || z->shape[1] != k || !z->is_floating()) {
      throw ValidationError("logits must be a floating N x K tensor");
    }
  }
  if (const auto* ids = bundle.find("sample_ids")) {
    expect_rank(*ids, 1);
    if (ids->shape[0] != n || ids->is_floating()) {
      throw ValidationError("sample_ids must be an i64 vector of length N");
    }
  }
}

TensorBundle read_bundle(const fs::path& dir) {
  const fs::path manifest_path = dir / kManifestFile;
  std::ifstream in(manifest_path);
  if (!in) throw FormatError("missing manifest " + manifest_path.string());

  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw FormatError("malformed manifest " + manifest_path.string() + ": " +
                      e.what());
  }

  TensorBundle bundle;
  try {
    bundle.manifest_version = manifest.at("manifest_version").get<int>();
    if (manifest.contains("metadata")) {
      for (const auto& [key, value] : manifest["metadata"].items()) {
        bundle.metadata[key] =
            value.is_string() ? value.get<std::string>() : value.dump();
      }
    }
    for (const auto& jt : manifest.at("tensors")) {
      TensorEntry t;
      t.name = jt.at("name").get<std::string>();
      t.dtype = parse_dtype(jt.at("dtype").get<std::string>());
      t.shape = jt.at("shape").get<std::vector<std::size_t>>();
      t.data_path = jt.at("data_path").get<std::string>();
      bundle.tensors.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw FormatError("manifest schema violation in " +
                      manifest_path.string() + ": " + e.what());
  }
  if (bundle.manifest_version != kManifestVersion) {
    throw FormatError("unsupported manifest_version " +
                      std::to_string(bundle.manifest_version));
  }

  for (auto& t : bundle.tensors) {
    check_data_path(t);
    decode_payload(t, read_file(dir / t.data_path));
  }
  validate_bundle(bundle);
  return bundle;
}

void write_bundle(const TensorBundle& bundle, const fs::path& dir) {
  validate_bundle(bundle);
  for (const auto& t : bundle.tensors) check_data_path(t);

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create bundle directory " + dir.string() + ": " +
                  ec.message());
  }

  json manifest;
  manifest["manifest_version"] = bundle.manifest_version;
  manifest["tensors"] = json::array();
  for (const auto& t : bundle.tensors) {
    manifest["tensors"].push_back({{"name", t.name},
                                   {"dtype", dtype_name(t.dtype)},
                                   {"shape", t.shape},
                                   {"data_path", t.data_path}});
    const fs::path target = dir / t.data_path;
    fs::create_directories(target.parent_path(), ec);
    write_file(target, encode_payload(t));
  }
  manifest["metadata"] = json::object();
  for (const auto& [key, value] : bundle.metadata) {
    manifest["metadata"][key] = value;
  }
  write_file(dir / kManifestFile, manifest.dump(2) + "\n");
}

}  // namespace bacon
