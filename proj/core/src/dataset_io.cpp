// Copyright 2026 The otafl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "otafl/dataset_io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

namespace otafl {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
  throw ConfigError(path.string() + ": " + what);
}

double read_f64le(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | b[i];
  return std::bit_cast<double>(bits);
}

void write_f64le(std::ostream& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) {
    b[i] = static_cast<unsigned char>(bits & 0xFF);
    bits >>= 8;
  }
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t read_be32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

}  // namespace

ClientDataset read_matrix_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string magic, version, encoding;
  long long rows = -1, cols = -1, label_col = -2;
  hs >> magic >> version >> rows >> cols >> label_col >> encoding;
  if (magic != "otafl-matrix" || version != "v1") fail(path, "bad header magic");
  if (rows <= 0 || cols <= 0) fail(path, "rows and cols must be positive");
  if (label_col < -1 || label_col >= cols) fail(path, "label column out of range");
  if (encoding != "text" && encoding != "f64le") fail(path, "unknown encoding '" + encoding + "'");
  if (label_col >= 0 && cols == 1) fail(path, "no feature columns left");

  const auto n = static_cast<std::size_t>(rows);
  const auto c = static_cast<std::size_t>(cols);
  std::vector<double> values(n * c);
  if (encoding == "f64le") {
    for (double& v : values) {
      v = read_f64le(in);
      if (!in) fail(path, "truncated binary body");
    }
  } else {
    std::size_t filled = 0;
    std::string line;
    while (filled < values.size() && std::getline(in, line)) {
      for (char& ch : line) {
        if (ch == ',' || ch == '\t' || ch == '\r') ch = ' ';
      }
      const char* p = line.data();
      const char* end = p + line.size();
      while (p < end) {
        while (p < end && *p == ' ') ++p;
        if (p == end) break;
        if (filled == values.size()) fail(path, "too many values");
        auto [next, ec] = std::from_chars(p, end, values[filled]);
        if (ec != std::errc()) fail(path, "malformed number near value " + std::to_string(filled));
        ++filled;
        p = next;
      }
    }
    if (filled != values.size()) fail(path, "expected " + std::to_string(values.size()) + " values, got " +
                                            std::to_string(filled));
  }

  ClientDataset out;
  const std::size_t fcols = label_col >= 0 ? c - 1 : c;
  out.features = RealMatrix(n, fcols);
  out.target.assign(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    std::size_t j = 0;
    for (std::size_t col = 0; col < c; ++col) {
      const double v = values[r * c + col];
      if (!std::isfinite(v)) fail(path, "non-finite value at row " + std::to_string(r));
      if (static_cast<long long>(col) == label_col) {
        out.target[r] = v;
      } else {
        out.features(r, j++) = v;
      }
    }
  }
  return out;
}

void write_matrix_file(const std::filesystem::path& path, const ClientDataset& data, MatrixEncoding encoding) {
  data.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  const std::size_t cols = data.dim() + 1;
  out << "otafl-matrix v1 " << data.size() << ' ' << cols << ' ' << data.dim() << ' '
      << (encoding == MatrixEncoding::text ? "text" : "f64le") << '\n';
  char buf[32];
  for (std::size_t r = 0; r < data.size(); ++r) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double v = j < data.dim() ? data.features(r, j) : data.target[r];
      if (encoding == MatrixEncoding::f64le) {
        write_f64le(out, v);
      } else {
        auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
        (void)ec;
        if (j > 0) out << ' ';
        out.write(buf, end - buf);
      }
    }
    if (encoding == MatrixEncoding::text) out << '\n';
  }
  if (!out) fail(path, "write failed");
}

ClientDataset read_mnist_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                             std::optional<std::size_t> limit) {
  std::ifstream img(images, std::ios::binary);
  if (!img) fail(images, "cannot open");
  std::ifstream lab(labels, std::ios::binary);
  if (!lab) fail(labels, "cannot open");
  if (read_be32(img) != 2051) fail(images, "not an IDX image file");
  if (read_be32(lab) != 2049) fail(labels, "not an IDX label file");
  std::size_t n = read_be32(img);
  const std::size_t h = read_be32(img);
  const std::size_t w = read_be32(img);
  if (read_be32(lab) != n) fail(labels, "label count does not match image count");
  if (limit) n = std::min(n, *limit);
  ClientDataset out;
  out.features = RealMatrix(n, h * w);
  out.target.resize(n);
  std::vector<unsigned char> pixels(h * w);
  for (std::size_t r = 0; r < n; ++r) {
    img.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
    char digit = 0;
    lab.read(&digit, 1);
    if (!img || !lab) fail(images, "truncated IDX data");
    for (std::size_t j = 0; j < pixels.size(); ++j) out.features(r, j) = pixels[j] / 255.0;
    out.target[r] = (static_cast<unsigned char>(digit) % 2 == 0) ? 1.0 : -1.0;
  }
  return out;
}

}  // namespace otafl
