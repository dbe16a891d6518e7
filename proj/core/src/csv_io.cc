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

#include "bacon/csv_io.h"

#include <algorithm>
#include <charconv>
#include <sstream>
#include <string_view>

#include "bacon/errors.h"

namespace bacon {
namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_field(std::string_view field, std::size_t line_no) {
  while (!field.empty() && (field.front() == ' ')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\r')) {
    field.remove_suffix(1);
  }
  T value{};
  const auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw FormatError("line " + std::to_string(line_no) + ": cannot parse '" +
                      std::string(field) + "'");
  }
  return value;
}

// Returns (sample_id, label, values) rows after checking the header.
struct Row {
  std::int64_t sample_id;
  int label;
  std::vector<double> values;
};

struct Table {
  std::size_t num_classes;
  std::vector<Row> rows;
};

Table parse_table(const std::string& text, std::string_view prefix) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line);
  if (header.size() < 4 || header[0] != "sample_id" || header[1] != "label") {
    throw FormatError("CSV header must start with sample_id,label and list "
                      "at least two class columns");
  }
  const std::size_t k = header.size() - 2;
  for (std::size_t j = 0; j < k; ++j) {
    if (header[j + 2] != std::string(prefix) + std::to_string(j)) {
      throw FormatError("unexpected CSV column '" + std::string(header[j + 2]) +
                        "'");
    }
  }

  std::vector<Row> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split(line);
    if (fields.size() != k + 2) {
      throw FormatError("line " + std::to_string(line_no) + " has " +
                        std::to_string(fields.size()) + " fields, expected " +
                        std::to_string(k + 2));
    }
    Row r;
    r.sample_id = parse_field<std::int64_t>(fields[0], line_no);
    r.label = parse_field<int>(fields[1], line_no);
    r.values.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
      r.values[j] = parse_field<double>(fields[j + 2], line_no);
    }
    rows.push_back(std::move(r));
  }
  return {k, std::move(rows)};
}

std::string header(std::string_view prefix, std::size_t k) {
  std::string h = "sample_id,label";
  for (std::size_t j = 0; j < k; ++j) {
    h += ",";
    h += prefix;
    h += std::to_string(j);
  }
  return h + "\n";
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::string angles_to_csv(const std::vector<AngleRecord>& records) {
  const std::size_t k = records.empty() ? 0 : records.front().angles.size();
  std::string out = header("phi_", k);
  for (const auto& r : records) {
    out += std::to_string(r.sample_id) + "," + std::to_string(r.label);
    for (double phi : r.angles) out += "," + format_double(phi);
    out += "\n";
  }
  return out;
}

std::vector<AngleRecord> angles_from_csv(const std::string& text) {
  std::vector<AngleRecord> out;
  for (auto& row : parse_table(text, "phi_").rows) {
    out.push_back({std::move(row.values), row.label, row.sample_id});
  }
  return out;
}

std::string confidences_to_csv(const ConfidenceMatrix& confidences,
                               const std::vector<std::int64_t>& sample_ids) {
  if (sample_ids.size() != confidences.num_samples()) {
    throw ShapeError("sample id count does not match confidence rows");
  }
  std::string out = header("p_", confidences.num_classes());
  for (std::size_t i = 0; i < confidences.num_samples(); ++i) {
    out += std::to_string(sample_ids[i]) + "," +
           std::to_string(confidences.labels()[i]);
    for (double p : confidences.row(i)) out += "," + format_double(p);
    out += "\n";
  }
  return out;
}

LoadedConfidences confidences_from_csv(const std::string& text,
                                       EstimatorTag tag) {
  auto [k, rows] = parse_table(text, "p_");
  Matrix probs(rows.size(), k);
  std::vector<int> labels(rows.size());
  std::vector<std::int64_t> ids(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(rows[i].values.begin(), rows[i].values.end(),
              probs.row(i).begin());
    labels[i] = rows[i].label;
    ids[i] = rows[i].sample_id;
  }
  return {ConfidenceMatrix(std::move(probs), std::move(labels), tag),
          std::move(ids)};
}

}  // namespace bacon
