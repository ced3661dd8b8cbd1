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
#include "zdp/matrix_io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <vector>

#include "zdp/error.hpp"

namespace zdp {

namespace {

[[noreturn]] void fail_at(std::size_t offset, const std::string& what) {
  throw FormatError(what + " at byte offset " + std::to_string(offset));
}

std::uint64_t load_u64(std::string_view bytes, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) {
    v = (v << 8) | static_cast<unsigned char>(bytes[at + static_cast<std::size_t>(i)]);
  }
  return v;
}

void store_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

}  // namespace

Eigen::MatrixXd decode_zdp_binary(std::string_view bytes) {
  for (std::size_t i = 0; i < kZdpMagic.size(); ++i) {
    if (i >= bytes.size()) fail_at(i, "truncated header: missing magic");
    if (bytes[i] != kZdpMagic[i]) fail_at(i, "bad magic (expected \"ZDP1\")");
  }
  if (bytes.size() < kZdpHeaderBytes) fail_at(bytes.size(), "truncated header: dimensions incomplete");
  const std::uint64_t rows = load_u64(bytes, 4);
  const std::uint64_t cols = load_u64(bytes, 12);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() / 8;
  if (cols != 0 && rows > limit / cols) fail_at(4, "declared dimensions overflow");
  const std::uint64_t payload = rows * cols * 8;
  const std::uint64_t available = bytes.size() - kZdpHeaderBytes;
  if (available < payload) {
    fail_at(bytes.size(), "truncated payload: " + std::to_string(rows) + "x" +
                              std::to_string(cols) + " needs " + std::to_string(payload) +
                              " bytes after the header");
  }
  if (available > payload) fail_at(kZdpHeaderBytes + payload, "trailing data after payload");

  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::size_t at = kZdpHeaderBytes;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = std::bit_cast<double>(load_u64(bytes, at));
      if (!std::isfinite(v)) fail_at(at, "non-finite value");
      m(i, j) = v;
      at += 8;
    }
  }
  return m;
}

std::string encode_zdp_binary(const Eigen::MatrixXd& m) {
  std::string out(kZdpMagic);
  out.reserve(kZdpHeaderBytes + static_cast<std::size_t>(m.size()) * 8);
  store_u64(out, static_cast<std::uint64_t>(m.rows()));
  store_u64(out, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) store_u64(out, std::bit_cast<std::uint64_t>(m(i, j)));
  }
  return out;
}

namespace {

struct Field {
  std::size_t offset;
  std::string_view text;
};

std::string_view trim(std::string_view s, std::size_t& lead) {
  lead = 0;
  while (lead < s.size() && (s[lead] == ' ' || s[lead] == '\t')) ++lead;
  std::size_t end = s.size();
  while (end > lead && (s[end - 1] == ' ' || s[end - 1] == '\t' || s[end - 1] == '\r')) --end;
  return s.substr(lead, end - lead);
}

bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace

Eigen::MatrixXd decode_csv(std::string_view text) {
  std::vector<std::vector<double>> rows;
  std::size_t cols = 0;
  std::size_t pos = 0;
  bool first_line = true;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const std::string_view line = text.substr(pos, eol - pos);
    std::size_t lead = 0;
    if (trim(line, lead).empty()) {
      pos = eol + 1;
      first_line = false;
      continue;
    }
    std::vector<Field> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::string_view raw = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      const std::string_view f = trim(raw, lead);
      fields.push_back(Field{pos + start + lead, f});
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    std::vector<double> values;
    values.reserve(fields.size());
    bool header = false;
    for (const Field& f : fields) {
      double v = 0.0;
      if (!parse_double(f.text, v)) {
        if (first_line && rows.empty()) {
          header = true;
          break;
        }
        fail_at(f.offset, "malformed number '" + std::string(f.text) + "'");
      }
      if (!std::isfinite(v)) fail_at(f.offset, "non-finite value");
      values.push_back(v);
    }
    first_line = false;
    if (!header) {
      if (rows.empty()) {
        cols = values.size();
      } else if (values.size() != cols) {
        fail_at(pos, "row has " + std::to_string(values.size()) + " fields, expected " +
                         std::to_string(cols));
      }
      rows.push_back(std::move(values));
    }
    pos = eol + 1;
  }
  if (rows.empty()) fail_at(text.size(), "no data rows");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

std::string encode_csv(const Eigen::MatrixXd& m) {
  std::string out;
  char buf[64];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out.push_back(',');
      const auto res = std::to_chars(buf, buf + sizeof buf, m(i, j));
      out.append(buf, res.ptr);
    }
    out.push_back('\n');
  }
  return out;
}

MatrixFormat format_for_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? MatrixFormat::csv : MatrixFormat::zdp_binary;
}

Eigen::MatrixXd read_matrix(const std::filesystem::path& path, MatrixFormat* detected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const bool magic = bytes.compare(0, kZdpMagic.size(), kZdpMagic) == 0;
  const bool binary = magic || path.extension() == ".zdp";
  if (detected) *detected = binary ? MatrixFormat::zdp_binary : MatrixFormat::csv;
  try {
    return binary ? decode_zdp_binary(bytes) : decode_csv(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m,
                  MatrixFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  const std::string bytes = format == MatrixFormat::csv ? encode_csv(m) : encode_zdp_binary(m);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed for " + path.string());
}

}  // namespace zdp
