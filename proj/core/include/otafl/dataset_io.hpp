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

#pragma once

#include <filesystem>
#include <optional>

#include "otafl/loss.hpp"

namespace otafl {

/// Matrix file: one header line
///
///   otafl-matrix v1 <rows> <cols> <label_col> <text|f64le>
///
/// followed by rows x cols values, row-major. `text` bodies hold one row per
/// line separated by whitespace or commas; `f64le` bodies are raw
/// little-endian IEEE doubles. label_col = -1 means no target column;
/// otherwise that column becomes the target and is removed from the features.
enum class MatrixEncoding { text, f64le };

ClientDataset read_matrix_file(const std::filesystem::path& path);
void write_matrix_file(const std::filesystem::path& path, const ClientDataset& data,
                       MatrixEncoding encoding);

/// MNIST IDX images and labels; pixels scaled to [0, 1], target +1 for even
/// digits and -1 for odd. `limit` caps the number of rows read.
ClientDataset read_mnist_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                             std::optional<std::size_t> limit = std::nullopt);

}  // namespace otafl
