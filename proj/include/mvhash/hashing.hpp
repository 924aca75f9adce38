// Copyright 2026-present the mvhash project
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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mvhash/common.hpp"

namespace mvhash {

/// Bit-packed binary codes: n items x B bits, ceil(B/64) words per item.
/// Bit k of item i is 1 iff the k-th hash value is +1. Padding bits past B
/// are always zero.
class PackedCodes {
 public:
  PackedCodes() = default;
  PackedCodes(std::size_t n, std::size_t bits);

  std::size_t size() const { return n_; }
  std::size_t bits() const { return bits_; }
  std::size_t words_per_item() const { return words_; }

  std::span<const std::uint64_t> row(std::size_t i) const {
    return {data_.data() + i * words_, words_};
  }
  std::span<std::uint64_t> row(std::size_t i) { return {data_.data() + i * words_, words_}; }

  bool bit(std::size_t i, std::size_t k) const {
    return (data_[i * words_ + k / 64] >> (k % 64)) & 1u;
  }
  void set_bit(std::size_t i, std::size_t k, bool value);

  const std::uint64_t* data() const { return data_.data(); }
  const std::vector<std::uint64_t>& words() const { return data_; }

  /// Copies the given rows, in order, into a new code set.
  PackedCodes gather(std::span<const std::size_t> rows) const;

  friend bool operator==(const PackedCodes&, const PackedCodes&) = default;

 private:
  std::size_t n_ = 0;
  std::size_t bits_ = 0;
  std::size_t words_ = 0;
  std::vector<std::uint64_t> data_;
};

/// Packs one +/-1 code given as booleans (true = +1).
std::vector<std::uint64_t> pack_bits(const std::vector<bool>& bits);

// Codes file: "MVC1", u32 n, u32 B, then n * ceil(B/64) u64 words.
void save_codes(const std::string& path, const PackedCodes& codes);
PackedCodes load_codes(const std::string& path);

}  // namespace mvhash

namespace mvhash::hashing {

enum class HashFamily : std::uint32_t { kLsh = 0, kPcah = 1, kItq = 2 };

HashFamily parse_family(const std::string& name);
std::string family_name(HashFamily family);

/// B linear hash functions: h(x) = sign(rotation * projection * (x - mean)),
/// with a projected value of exactly 0 mapping to +1.
class HashModel {
 public:
  HashModel() = default;
  HashModel(HashFamily family, Eigen::VectorXd mean, Eigen::MatrixXd projection,
            Eigen::MatrixXd rotation);

  HashFamily family() const { return family_; }
  std::size_t bits() const { return static_cast<std::size_t>(projection_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(projection_.cols()); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& projection() const { return projection_; }
  const Eigen::MatrixXd& rotation() const { return rotation_; }

  /// rotation * projection, cached.
  const Eigen::MatrixXd& encoder() const { return encoder_; }

  /// Projected (pre-sign) values of one vector.
  Eigen::VectorXd project(std::span<const float> x) const;

 private:
  HashFamily family_ = HashFamily::kLsh;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd projection_;
  Eigen::MatrixXd rotation_;
  Eigen::MatrixXd encoder_;
};

struct TrainOptions {
  std::size_t bits = 48;
  std::uint64_t seed = 1;
  std::size_t itq_iters = 50;
};

/// Trains one family on the rows of 'data'.
///   lsh:  Gaussian hyperplanes through the data mean
///   pcah: top-B principal directions, thresholded at the mean
///   itq:  PCA followed by itq_iters rounds of binary assignment and
///         orthogonal Procrustes rotation
/// If the covariance has fewer than B usable components, the missing
/// directions are filled with random orthonormal ones and a warning is
/// emitted. When loss_history is given (itq only), it receives the
/// quantization loss ||sign(V R^T) - V R^T||_F^2 before the first and after
/// every rotation update.
HashModel train(HashFamily family, const Matrix& data, const TrainOptions& options,
                std::vector<double>* loss_history = nullptr);

/// Encodes every row of 'data'.
PackedCodes encode(const HashModel& model, const Matrix& data);

/// Encodes a single vector into one packed row.
std::vector<std::uint64_t> encode_one(const HashModel& model, std::span<const float> x);

std::uint32_t hamming(const PackedCodes& codes, std::size_t i, std::size_t j);
std::uint32_t hamming(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b);

/// Top-k rows of 'codes' by Hamming distance to query_code (score = distance),
/// ascending, ties broken by ascending row index.
std::vector<ScoredId> hamming_rank(const PackedCodes& codes, std::span<const std::uint64_t> query_code,
                                   std::size_t k);

/// Top-k positions of 'distances', ascending, ties by ascending position.
std::vector<ScoredId> top_k_ascending(std::span<const double> distances, std::size_t k);

// Model file: "MVHM", u32 version, u32 family, u32 D, u32 B, then mean[D],
// projection[B x D], rotation[B x B] as little-endian f64, row-major.
void save_model(const std::string& path, const HashModel& model);
HashModel load_model(const std::string& path);

}  // namespace mvhash::hashing
