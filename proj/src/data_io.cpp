/*
 * Copyright 2026 The fliscc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "fliscc/data_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fliscc/errors.hpp"
#include "fliscc/rng.hpp"

namespace fliscc {

namespace {

void check_shape(std::size_t features, int classes) {
  if (features < 1) throw ConfigError("dataset: features must be >= 1");
  if (classes < 2) throw ConfigError("dataset: classes must be >= 2");
}

}  // namespace

SampleBatch make_blobs(std::size_t samples, std::size_t features, int classes,
                       double separation, double noise, std::uint64_t seed) {
  check_shape(features, classes);
  Philox4x32 rng = make_stream(seed, StreamPurpose::kDataGen, 0, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> means(static_cast<std::size_t>(classes) * features);
  for (double& m : means) m = separation * normal(rng);

  SampleBatch out;
  out.dim = features;
  out.features.resize(samples * features);
  out.labels.resize(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    const int c = static_cast<int>(i % static_cast<std::size_t>(classes));
    out.labels[i] = c;
    for (std::size_t j = 0; j < features; ++j) {
      out.features[i * features + j] = means[c * features + j] + noise * normal(rng);
    }
  }
  return out;
}

SampleBatch make_logistic_teacher(std::size_t samples, std::size_t features, int classes,
                                  double separation, double noise, std::uint64_t seed) {
  check_shape(features, classes);
  Philox4x32 rng = make_stream(seed, StreamPurpose::kDataGen, 0, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> any_class(0, classes - 1);
  const double flip = std::clamp(noise, 0.0, 1.0);

  std::vector<double> teacher(static_cast<std::size_t>(classes) * features);
  for (double& v : teacher) v = normal(rng);

  SampleBatch out;
  out.dim = features;
  out.features.resize(samples * features);
  out.labels.resize(samples);
  std::vector<double> logits(static_cast<std::size_t>(classes));
  for (std::size_t i = 0; i < samples; ++i) {
    double* x = out.features.data() + i * features;
    for (std::size_t j = 0; j < features; ++j) x[j] = normal(rng);
    double top = -INFINITY;
    for (int c = 0; c < classes; ++c) {
      double z = 0.0;
      for (std::size_t j = 0; j < features; ++j) z += teacher[c * features + j] * x[j];
      logits[c] = separation * z;
      top = std::max(top, logits[c]);
    }
    double norm = 0.0;
    for (double& z : logits) {
      z = std::exp(z - top);
      norm += z;
    }
    double u = unit(rng) * norm;
    int label = classes - 1;
    for (int c = 0; c < classes; ++c) {
      if (u < logits[c]) {
        label = c;
        break;
      }
      u -= logits[c];
    }
    if (unit(rng) < flip) label = any_class(rng);
    out.labels[i] = label;
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'F', 'L', 'D', 'S'};

static_assert(std::endian::native == std::endian::little,
              "binary dataset I/O assumes a little-endian host");

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void append_double(std::string& line, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  line.append(buf, res.ptr);
}

template <typename T>
T parse_field(std::string_view field, const std::string& path, std::size_t line_no) {
  T value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ConfigError(path + ":" + std::to_string(line_no) + ": bad field '" +
                      std::string(field) + "'");
  }
  return value;
}

// Splits a stored row of `cols` values into features and the label column.
void take_row(SampleBatch& out, const double* row, std::size_t cols, std::size_t label_col,
              const std::string& path, std::size_t line_no) {
  for (std::size_t j = 0; j < cols; ++j) {
    if (j == label_col) {
      const double label = row[j];
      if (!(label >= 0.0) || label != std::floor(label) || label > 1e9) {
        throw ConfigError(path + ":" + std::to_string(line_no) +
                          ": label must be a non-negative integer");
      }
      out.labels.push_back(static_cast<int>(label));
    } else {
      out.features.push_back(row[j]);
    }
  }
}

void check_header(std::uint64_t rows, std::uint64_t cols, std::uint64_t label_col,
                  const std::string& path) {
  if (cols < 2 || label_col >= cols || rows > (1ull << 32) || cols > (1ull << 24)) {
    throw ConfigError(path + ": bad header (rows, cols, label column)");
  }
}

SampleBatch read_csv(const std::string& path, std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path + ": empty file");
  std::uint64_t header[3] = {0, 0, 0};
  {
    std::string_view rest = line;
    for (int k = 0; k < 3; ++k) {
      const std::size_t comma = rest.find(',');
      if ((k < 2) == (comma == std::string_view::npos)) {
        throw ConfigError(path + ": header must be rows,cols,label_col");
      }
      header[k] = parse_field<std::uint64_t>(rest.substr(0, comma), path, 1);
      if (comma != std::string_view::npos) rest.remove_prefix(comma + 1);
    }
  }
  const auto [rows, cols, label_col] = header;
  check_header(rows, cols, label_col, path);
  SampleBatch out;
  out.dim = cols - 1;
  std::vector<double> row(cols);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::string_view rest = line;
    std::size_t field = 0;
    while (true) {
      const std::size_t comma = rest.find(',');
      if (field == cols) {
        throw ConfigError(path + ":" + std::to_string(line_no) + ": too many fields");
      }
      row[field++] = parse_field<double>(rest.substr(0, comma), path, line_no);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (field != cols) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(cols) + " fields");
    }
    take_row(out, row.data(), cols, label_col, path, line_no);
  }
  if (out.size() != rows) {
    throw ConfigError(path + ": header declares " + std::to_string(rows) + " rows, found " +
                      std::to_string(out.size()));
  }
  return out;
}

SampleBatch read_binary(const std::string& path, std::istream& in) {
  char magic[4];
  std::uint64_t header[3] = {0, 0, 0};
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(header), sizeof header);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw ConfigError(path + ": not a dataset file");
  const auto [rows, cols, label_col] = header;
  check_header(rows, cols, label_col, path);
  std::vector<double> values(rows * cols);
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!in) throw ConfigError(path + ": truncated dataset file");
  SampleBatch out;
  out.dim = cols - 1;
  for (std::size_t i = 0; i < rows; ++i) {
    take_row(out, values.data() + i * cols, cols, label_col, path, i + 1);
  }
  return out;
}

}  // namespace

void write_dataset(const std::string& path, const SampleBatch& data) {
  data.validate();
  // The label is stored as the last column.
  const std::uint64_t rows = data.size();
  const std::uint64_t cols = data.dim + 1;
  const std::uint64_t label_col = data.dim;
  if (ends_with(path, ".csv")) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << rows << ',' << cols << ',' << label_col << '\n';
    std::string line;
    for (std::size_t i = 0; i < data.size(); ++i) {
      line.clear();
      for (double v : data.row(i)) {
        append_double(line, v);
        line += ',';
      }
      line += std::to_string(data.labels[i]);
      out << line << '\n';
    }
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  const std::uint64_t header[3] = {rows, cols, label_col};
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  std::vector<double> row(cols);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto x = data.row(i);
    std::copy(x.begin(), x.end(), row.begin());
    row[label_col] = data.labels[i];
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
}

SampleBatch read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open dataset '" + path + "'");
  SampleBatch out = ends_with(path, ".csv") ? read_csv(path, in) : read_binary(path, in);
  try {
    out.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return out;
}

// ---------------------------------------------------------------------------

DataSpec parse_data_spec(std::string_view text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("data spec is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("data spec must be an object");
  static const std::set<std::string> kKeys = {"source", "samples", "features", "classes",
                                              "separation", "noise", "seed", "output"};
  for (const auto& [key, value] : doc.items()) {
    if (!kKeys.count(key)) throw ConfigError("unknown key '" + key + "' in data spec");
  }
  DataSpec spec;
  try {
    spec.source = doc.value("source", spec.source);
    spec.samples = doc.value("samples", spec.samples);
    spec.features = doc.value("features", spec.features);
    spec.classes = doc.value("classes", spec.classes);
    spec.separation = doc.value("separation", spec.separation);
    spec.noise = doc.value("noise", spec.noise);
    spec.seed = doc.value("seed", spec.seed);
    spec.output = doc.value("output", spec.output);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("data spec: ") + e.what());
  }
  if (spec.output.empty()) throw ConfigError("data spec needs 'output'");
  return spec;
}

SampleBatch generate(const DataSpec& spec) {
  if (spec.source == "blobs") {
    return make_blobs(spec.samples, spec.features, spec.classes, spec.separation, spec.noise,
                      spec.seed);
  }
  if (spec.source == "logistic_teacher") {
    return make_logistic_teacher(spec.samples, spec.features, spec.classes, spec.separation,
                                 spec.noise, spec.seed);
  }
  throw ConfigError("unknown data source '" + spec.source + "'");
}

}  // namespace fliscc
