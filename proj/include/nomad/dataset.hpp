/*
 * Copyright (c) 2026, the nomad-projection authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nomad/error.hpp"

namespace nomad {

/// High-dimensional input vectors, row-major n x d, float32.
/// Immutable after loading; safe for concurrent reads.
struct VectorDataset {
  std::size_t rows = 0;
  std::size_t dims = 0;
  std::vector<float> data;            // rows * dims
  std::vector<std::string> ids;       // unique, defaults to row index
  std::vector<std::string> labels;    // empty or one per row

  const float* row(std::size_t i) const { return data.data() + i * dims; }
  bool has_labels() const { return !labels.empty(); }
};

/// Learned 2-D positions, row-major n x 2, float64.
struct LayoutMatrix {
  std::size_t rows = 0;
  std::vector<double> positions;      // rows * 2
  std::uint64_t epoch = 0;

  static LayoutMatrix zeros(std::size_t n) {
    LayoutMatrix out;
    out.rows = n;
    out.positions.assign(n * 2, 0.0);
    return out;
  }
  double* row(std::size_t i) { return positions.data() + i * 2; }
  const double* row(std::size_t i) const { return positions.data() + i * 2; }
};

enum class VectorFormat { RawF32, Csv };

namespace detail {

inline void validate_finite(const VectorDataset& ds) {
  for (std::size_t i = 0; i < ds.rows; ++i) {
    const float* r = ds.row(i);
    for (std::size_t j = 0; j < ds.dims; ++j) {
      if (!std::isfinite(r[j])) {
        fail(ErrorKind::Validation,
             "non-finite value at row " + std::to_string(i) + ", column " +
                 std::to_string(j));
      }
    }
  }
}

inline void assign_default_ids(VectorDataset& ds) {
  ds.ids.resize(ds.rows);
  for (std::size_t i = 0; i < ds.rows; ++i) ds.ids[i] = std::to_string(i);
}

inline void check_dataset_shape(const VectorDataset& ds) {
  if (ds.rows < 2) fail(ErrorKind::Parameter, "dataset needs at least 2 rows");
  if (ds.dims < 1) fail(ErrorKind::Parameter, "dataset needs at least 1 column");
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

inline double parse_double(const std::string& text, std::size_t row,
                           std::size_t col) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double value = std::strtod(begin, &end);
  if (end == begin || *end != '\0') {
    fail(ErrorKind::Validation, "unparseable number '" + text + "' at row " +
                                    std::to_string(row) + ", column " +
                                    std::to_string(col));
  }
  return value;
}

}  // namespace detail

/// Reads a little-endian float32 row-major binary file. One of rows/dims may
/// be omitted and is derived from the file size; providing both makes the
/// size check strict.
inline VectorDataset load_vectors_raw(const std::string& path,
                                      std::optional<std::size_t> rows,
                                      std::optional<std::size_t> dims) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  in.seekg(0, std::ios::end);
  const std::uint64_t bytes = static_cast<std::uint64_t>(in.tellg());
  in.seekg(0, std::ios::beg);

  if (!rows && !dims)
    fail(ErrorKind::Parameter, "raw-f32 needs --rows and/or --dims");
  if (bytes % 4 != 0)
    fail(ErrorKind::Dimension, "file size " + std::to_string(bytes) +
                                   " is not a multiple of 4 bytes");
  const std::uint64_t values = bytes / 4;
  std::size_t n = rows.value_or(0), d = dims.value_or(0);
  if (rows && dims) {
    if (static_cast<std::uint64_t>(n) * d != values)
      fail(ErrorKind::Dimension,
           "file holds " + std::to_string(bytes) + " bytes but rows*dims*4 = " +
               std::to_string(static_cast<std::uint64_t>(n) * d * 4));
  } else if (rows) {
    if (n == 0 || values % n != 0)
      fail(ErrorKind::Dimension, "file size not divisible by rows");
    d = values / n;
  } else {
    if (d == 0 || values % d != 0)
      fail(ErrorKind::Dimension, "file size not divisible by dims");
    n = values / d;
  }

  std::vector<unsigned char> buf(bytes);
  if (bytes > 0 &&
      !in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(bytes)))
    fail(ErrorKind::Io, "short read on '" + path + "'");

  VectorDataset ds;
  ds.rows = n;
  ds.dims = d;
  ds.data.resize(values);
  for (std::uint64_t i = 0; i < values; ++i) {
    const std::uint32_t word = static_cast<std::uint32_t>(buf[4 * i]) |
                               (static_cast<std::uint32_t>(buf[4 * i + 1]) << 8) |
                               (static_cast<std::uint32_t>(buf[4 * i + 2]) << 16) |
                               (static_cast<std::uint32_t>(buf[4 * i + 3]) << 24);
    ds.data[i] = std::bit_cast<float>(word);
  }
  detail::check_dataset_shape(ds);
  detail::validate_finite(ds);
  detail::assign_default_ids(ds);
  return ds;
}

/// Reads a headerless rectangular numeric CSV. rows/dims, when given, are
/// cross-checked against the parsed shape.
inline VectorDataset load_vectors_csv(const std::string& path,
                                      std::optional<std::size_t> rows,
                                      std::optional<std::size_t> dims) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");

  VectorDataset ds;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    if (line.empty() && in.peek() == EOF) break;
    const auto fields = detail::split_csv_line(line);
    if (ds.rows == 0) {
      ds.dims = fields.size();
    } else if (fields.size() != ds.dims) {
      fail(ErrorKind::Schema, "ragged csv: row " + std::to_string(lineno) +
                                  " has " + std::to_string(fields.size()) +
                                  " fields, expected " + std::to_string(ds.dims));
    }
    for (std::size_t j = 0; j < fields.size(); ++j)
      ds.data.push_back(
          static_cast<float>(detail::parse_double(fields[j], lineno, j)));
    ++ds.rows;
    ++lineno;
  }
  if (rows && *rows != ds.rows)
    fail(ErrorKind::Dimension, "csv has " + std::to_string(ds.rows) +
                                   " rows, expected " + std::to_string(*rows));
  if (dims && *dims != ds.dims)
    fail(ErrorKind::Dimension, "csv has " + std::to_string(ds.dims) +
                                   " columns, expected " + std::to_string(*dims));
  detail::check_dataset_shape(ds);
  detail::validate_finite(ds);
  detail::assign_default_ids(ds);
  return ds;
}

inline VectorDataset load_vectors(const std::string& path, VectorFormat format,
                                  std::optional<std::size_t> rows = {},
                                  std::optional<std::size_t> dims = {}) {
  return format == VectorFormat::RawF32 ? load_vectors_raw(path, rows, dims)
                                        : load_vectors_csv(path, rows, dims);
}

/// Writes `id,x,y[,label]` with 17 significant digits so that reloading is
/// bit-exact.
inline void save_layout(const LayoutMatrix& layout,
                        const std::vector<std::string>& ids,
                        const std::vector<std::string>& labels,
                        const std::string& path) {
  if (ids.size() != layout.rows)
    fail(ErrorKind::Parameter, "ids length " + std::to_string(ids.size()) +
                                   " != layout rows " +
                                   std::to_string(layout.rows));
  if (!labels.empty() && labels.size() != layout.rows)
    fail(ErrorKind::Parameter, "labels length != layout rows");

  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path + "'");
  const bool with_labels = !labels.empty();
  out << (with_labels ? "id,x,y,label\n" : "id,x,y\n");
  char buf[64];
  for (std::size_t i = 0; i < layout.rows; ++i) {
    const double* p = layout.row(i);
    out << ids[i] << ',';
    std::snprintf(buf, sizeof buf, "%.17g", p[0]);
    out << buf << ',';
    std::snprintf(buf, sizeof buf, "%.17g", p[1]);
    out << buf;
    if (with_labels) out << ',' << labels[i];
    out << '\n';
  }
  if (!out) fail(ErrorKind::Io, "write failed on '" + path + "'");
}

struct LoadedLayout {
  LayoutMatrix layout;
  std::vector<std::string> ids;
  std::vector<std::string> labels;  // empty when the file had no label column
};

/// Inverse of save_layout.
inline LoadedLayout load_layout(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::Schema, "empty layout file");
  const auto header = detail::split_csv_line(line);
  const bool with_labels = header.size() == 4 && header[3] == "label";
  if (!(header.size() == 3 || with_labels) || header[0] != "id" ||
      header[1] != "x" || header[2] != "y")
    fail(ErrorKind::Schema, "layout header must be id,x,y[,label]");

  LoadedLayout out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    if (line.empty() && in.peek() == EOF) break;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size())
      fail(ErrorKind::Schema,
           "row " + std::to_string(lineno) + " has wrong field count");
    out.ids.push_back(fields[0]);
    out.layout.positions.push_back(detail::parse_double(fields[1], lineno, 1));
    out.layout.positions.push_back(detail::parse_double(fields[2], lineno, 2));
    if (with_labels) out.labels.push_back(fields[3]);
    ++lineno;
  }
  out.layout.rows = out.ids.size();
  for (double v : out.layout.positions)
    if (!std::isfinite(v))
      fail(ErrorKind::Validation, "non-finite coordinate in layout file");
  return out;
}

}  // namespace nomad
