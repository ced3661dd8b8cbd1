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

#include <array>
#include <cstdint>

#include <Eigen/Dense>

namespace zdp {

/// Identifies one reproducible random stream. Two generators built from
/// equal specs produce identical sequences on every platform.
struct RngSpec {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  /// Deterministic child stream, e.g. one per Monte Carlo trial or per
  /// batch index. Children of distinct indices never share a counter space.
  [[nodiscard]] RngSpec substream(std::uint64_t index) const;

  friend bool operator==(const RngSpec&, const RngSpec&) = default;
};

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// Key    = (seed_lo, seed_hi)
/// Counter = (block_lo, block_hi, stream_lo, stream_hi)
///
/// Each block yields four 32-bit words. 64-bit draws combine two words
/// (first word in the high half). Uniform doubles use the top 53 bits of a
/// 64-bit draw, shifted into the open interval (0, 1). Normal deviates use
/// the Box-Muller transform and consume two uniforms per pair of outputs.
class Philox {
 public:
  using result_type = std::uint64_t;

  explicit Philox(RngSpec spec);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() { return next_u64(); }

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1).
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi);
  double normal();
  /// Integer uniform on [0, n). Uses rejection to avoid modulo bias.
  std::uint64_t below(std::uint64_t n);

  Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols,
                                double stddev = 1.0);
  Eigen::VectorXd normal_vector(Eigen::Index size, double stddev = 1.0);

  [[nodiscard]] const RngSpec& spec() const { return spec_; }

  /// Raw block function, exposed for known-answer tests.
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter,
                                            std::array<std::uint32_t, 2> key);

 private:
  void refill();

  RngSpec spec_;
  std::uint64_t block_index_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffered_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// SplitMix64 finalizer; used to derive substream identifiers.
std::uint64_t mix64(std::uint64_t x);

}  // namespace zdp
