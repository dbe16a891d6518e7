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


#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include <gtest/gtest.h>

#include "bacon/bundle_io.h"
#include "bacon/serialization.h"
#include "test_util.h"

namespace bacon {
namespace {

using testing::TempDir;
using testing::slurp;

TensorBundle minimal_bundle() {
  Matrix acts(2, 3, std::vector<double>{1, 2, 3, 4, 5, 6});
  Matrix w(2, 3, std::vector<double>{1, 0, 0, 0, 1, 0});
  return make_classifier_bundle(acts, w, {0, 1});
}

void truncate_file(const std::filesystem::path& p, std::size_t bytes) {
  std::string data = slurp(p);
  data.resize(data.size() - bytes);
  std::ofstream(p, std::ios::binary | std::ios::trunc) << data;
}

TEST(BundleIo, MinimalBundleReadsBack) {
  TempDir dir;
  write_bundle(minimal_bundle(), dir.path());
  const TensorBundle b = read_bundle(dir.path());
  EXPECT_EQ(b.num_samples(), 2u);
  EXPECT_EQ(b.feature_dim(), 3u);
  EXPECT_EQ(b.num_classes(), 2u);
  EXPECT_EQ(b.activations(), minimal_bundle().activations());
  EXPECT_EQ(b.labels(), (std::vector<int>{0, 1}));
}

TEST(BundleIo, RoundTripIsBitIdentical) {
  TempDir a, b;
  write_bundle(minimal_bundle(), a.path());
  write_bundle(read_bundle(a.path()), b.path());
  for (const char* f : {"activations.bin", "weights.bin", "labels.bin"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
}

TEST(BundleIo, LabelEqualToKIsRejected) {
  TensorBundle bundle = minimal_bundle();
  bundle.set(make_int_tensor("labels", {2}, {0, 2}));
  EXPECT_THROW(validate_bundle(bundle), ValidationError);

  // Same check on the read path: patch the payload on disk.
  TempDir dir;
  write_bundle(minimal_bundle(), dir.path());
  const std::int64_t bad[2] = {0, 2};
  std::ofstream(dir / "labels.bin", std::ios::binary | std::ios::trunc)
      .write(reinterpret_cast<const char*>(bad), sizeof bad);
  EXPECT_THROW(read_bundle(dir.path()), ValidationError);
}

TEST(BundleIo, TruncatedWeightsFailIntegrity) {
  TempDir dir;
  write_bundle(minimal_bundle(), dir.path());
  truncate_file(dir / "weights.bin", 4);
  EXPECT_THROW(read_bundle(dir.path()), IntegrityError);
}

TEST(BundleIo, MissingManifestIsFormatError) {
  TempDir dir;
  EXPECT_THROW(read_bundle(dir.path()), FormatError);
  std::ofstream(dir / "manifest.json") << "{ not json";
  EXPECT_THROW(read_bundle(dir.path()), FormatError);
}

TEST(BundleIo, NaNRejectedAtWriteTime) {
  TensorBundle bundle = minimal_bundle();
  bundle.set(make_float_tensor(
      "activations", {2, 3},
      {1, 2, std::numeric_limits<double>::quiet_NaN(), 4, 5, 6}));
  TempDir dir;
  EXPECT_THROW(write_bundle(bundle, dir / "out"), ValidationError);
  EXPECT_FALSE(std::filesystem::exists(dir / "out" / "manifest.json"));
}

TEST(BundleIo, InfRejected) {
  TensorBundle bundle = minimal_bundle();
  bundle.set(make_float_tensor(
      "weights", {2, 3},
      {1, 0, 0, 0, std::numeric_limits<double>::infinity(), 0}));
  EXPECT_THROW(validate_bundle(bundle), ValidationError);
}

TEST(BundleIo, MissingRequiredTensorRejected) {
  for (const char* drop : {"activations", "weights", "labels"}) {
    TensorBundle bundle = minimal_bundle();
    std::erase_if(bundle.tensors,
                  [&](const TensorEntry& e) { return e.name == drop; });
    EXPECT_THROW(validate_bundle(bundle), ValidationError) << drop;
  }
}

TEST(BundleIo, DuplicateNamesRejected) {
  TensorBundle bundle = minimal_bundle();
  bundle.tensors.push_back(bundle.tensors.front());
  EXPECT_THROW(validate_bundle(bundle), ValidationError);
}

TEST(BundleIo, SingleClassRejected) {
  Matrix acts(2, 3, 1.0);
  Matrix w(1, 3, 1.0);
  EXPECT_THROW(validate_bundle(make_classifier_bundle(acts, w, {0, 0})),
               ValidationError);
}

TEST(BundleIo, ShapeDisagreementRejected) {
  TensorBundle bundle = minimal_bundle();
  bundle.set(make_float_tensor("weights", {2, 2}, {1, 0, 0, 1}));
  EXPECT_THROW(validate_bundle(bundle), ValidationError);
}

TEST(BundleIo, EmptySampleIsAccepted) {
  TensorBundle bundle =
      make_classifier_bundle(Matrix(0, 3), Matrix(2, 3, 1.0), {});
  TempDir dir;
  write_bundle(bundle, dir.path());
  EXPECT_EQ(read_bundle(dir.path()).num_samples(), 0u);
}

TEST(BundleIo, UnwritablePathIsIoError) {
  TempDir dir;
  std::ofstream(dir / "file") << "x";
  EXPECT_THROW(write_bundle(minimal_bundle(), dir / "file" / "sub"), IoError);
}

TEST(BundleIo, DataPathEscapingBundleRejected) {
  TempDir dir;
  write_bundle(minimal_bundle(), dir.path());
  std::string manifest = slurp(dir / "manifest.json");
  const auto at = manifest.find("\"weights.bin\"");
  ASSERT_NE(at, std::string::npos);
  manifest.replace(at, 13, "\"../weights.bin\"");
  std::ofstream(dir / "manifest.json", std::ios::trunc) << manifest;
  EXPECT_THROW(read_bundle(dir.path()), FormatError);
}

TEST(BundleIo, OptionalTensorsSurvive) {
  Matrix acts(2, 2, std::vector<double>{1, 2, 3, 4});
  Matrix w(2, 2, std::vector<double>{1, 0, 0, 1});
  Matrix logits(2, 2, std::vector<double>{1.5, 2, 3.5, 4});
  TensorBundle bundle = make_classifier_bundle(
      acts, w, {1, 0}, std::vector<double>{0.5, 0.0}, logits);
  bundle.metadata["split"] = "test";
  TempDir dir;
  write_bundle(bundle, dir.path());
  const TensorBundle back = read_bundle(dir.path());
  EXPECT_EQ(*back.biases(), (std::vector<double>{0.5, 0.0}));
  EXPECT_EQ(*back.logits(), logits);
  EXPECT_EQ(back.metadata.at("split"), "test");
  EXPECT_EQ(back.sample_ids(), (std::vector<std::int64_t>{0, 1}));
}

// 1000x512 f32 payload: the file must hash exactly like the raw
// little-endian float bytes built independently here.
TEST(BundleIo, LargeF32PayloadHashOracle) {
  static_assert(std::endian::native == std::endian::little);
  constexpr std::size_t n = 1000, d = 512;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<float> u(-3.0f, 3.0f);
  std::vector<float> raw(n * d);
  for (float& x : raw) x = u(rng);
  std::string expected(raw.size() * sizeof(float), '\0');
  std::memcpy(expected.data(), raw.data(), expected.size());

  Matrix acts(n, d);
  for (std::size_t i = 0; i < n * d; ++i) acts(i / d, i % d) = raw[i];
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % 2);
  const TensorBundle bundle = make_classifier_bundle(
      acts, Matrix(2, d, 0.5), labels, std::nullopt, std::nullopt,
      DType::kF32);

  TempDir a, b;
  write_bundle(bundle, a.path());
  write_bundle(read_bundle(a.path()), b.path());
  const std::string hash = content_hash(expected);
  EXPECT_EQ(content_hash(slurp(a / "activations.bin")), hash);
  EXPECT_EQ(content_hash(slurp(b / "activations.bin")), hash);
}

TEST(BundleIo, DtypeNames) {
  for (DType t : {DType::kF32, DType::kF64, DType::kI64}) {
    EXPECT_EQ(parse_dtype(dtype_name(t)), t);
  }
  EXPECT_EQ(dtype_size(DType::kF32), 4u);
  EXPECT_THROW(parse_dtype("f16"), FormatError);
}

}  // namespace
}  // namespace bacon
