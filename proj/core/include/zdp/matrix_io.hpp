// Copyright 2026 The ZDP Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace zdp {

/// On-disk matrix encodings.
///
/// zdp-binary: ASCII "ZDP1", rows (u64 LE), cols (u64 LE), then rows*cols
/// IEEE-754 binary64 LE values in row-major order. Nothing may follow.
///
/// csv: one row per line, comma separated, '.' decimal point, optional single
/// header row. Written with shortest round-trip formatting.
enum class MatrixFormat { csv, zdp_binary };

inline constexpr std::string_view kZdpMagic = "ZDP1";
inline constexpr std::size_t kZdpHeaderBytes = 20;

Eigen::MatrixXd decode_zdp_binary(std::string_view bytes);
std::string encode_zdp_binary(const Eigen::MatrixXd& m);

Eigen::MatrixXd decode_csv(std::string_view text);
std::string encode_csv(const Eigen::MatrixXd& m);

/// Detects the format from the magic bytes. Files with a .zdp extension must
/// carry the magic. Throws FormatError naming the byte offset of the problem.
Eigen::MatrixXd read_matrix(const std::filesystem::path& path,
                            MatrixFormat* detected = nullptr);
void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m,
                  MatrixFormat format);

/// .csv -> csv, anything else -> zdp-binary.
MatrixFormat format_for_path(const std::filesystem::path& path);

}  // namespace zdp
