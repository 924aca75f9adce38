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

#include "mvhash/hashing.hpp"

#include <algorithm>
#include <numeric>

#include "mvhash/binary_io.hpp"
#include "mvhash/simd/kernels.hpp"

namespace mvhash {

PackedCodes::PackedCodes(std::size_t n, std::size_t bits)
    : n_(n), bits_(bits), words_((bits + 63) / 64), data_(n * ((bits + 63) / 64), 0) {
  if (bits == 0) throw Error("codes need at least one bit");
}

void PackedCodes::set_bit(std::size_t i, std::size_t k, bool value) {
  const std::uint64_t mask = std::uint64_t{1} << (k % 64);
  std::uint64_t& word = data_[i * words_ + k / 64];
  word = value ? (word | mask) : (word & ~mask);
}

PackedCodes PackedCodes::gather(std::span<const std::size_t> rows) const {
  PackedCodes out(rows.size(), bits_);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto src = row(rows[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

std::vector<std::uint64_t> pack_bits(const std::vector<bool>& bits) {
  std::vector<std::uint64_t> words((bits.size() + 63) / 64, 0);
  for (std::size_t k = 0; k < bits.size(); ++k) {
    if (bits[k]) words[k / 64] |= std::uint64_t{1} << (k % 64);
  }
  return words;
}

void save_codes(const std::string& path, const PackedCodes& codes) {
  io::Writer out(path);
  out.magic("MVC1");
  out.put(static_cast<std::uint32_t>(codes.size()));
  out.put(static_cast<std::uint32_t>(codes.bits()));
  out.put_array(std::span<const std::uint64_t>(codes.words()));
  out.close();
}

PackedCodes load_codes(const std::string& path) {
  io::Reader in(path);
  in.expect_magic("MVC1");
  const auto n = in.get<std::uint32_t>();
  const auto bits = in.get<std::uint32_t>();
  PackedCodes codes(n, bits);
  if (in.remaining() != std::uint64_t{n} * codes.words_per_item() * 8) {
    throw Error("'" + path + "': code payload does not match header");
  }
  std::vector<std::uint64_t> words(n * codes.words_per_item());
  in.get_array(std::span<std::uint64_t>(words));
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(words.begin() + static_cast<std::ptrdiff_t>(i * codes.words_per_item()),
                codes.words_per_item(), codes.row(i).begin());
  }
  if (bits % 64 != 0) {
    const std::uint64_t pad = ~std::uint64_t{0} << (bits % 64);
    for (std::size_t i = 0; i < n; ++i) {
      if (codes.row(i).back() & pad) throw Error("'" + path + "': nonzero padding bits");
    }
  }
  return codes;
}

}  // namespace mvhash

namespace mvhash::hashing {

namespace {

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = gauss(rng);
  }
  return m;
}

Eigen::MatrixXd random_orthogonal(Eigen::Index n, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian_matrix(n, n, rng));
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  }
  return q;
}

Eigen::MatrixXd centered(const Matrix& data, const Eigen::VectorXd& mean) {
  Eigen::MatrixXd x = data.cast<double>();
  x.rowwise() -= mean.transpose();
  return x;
}

// Top-B principal directions as rows; random orthonormal completion when the
// covariance has too few usable components.
Eigen::MatrixXd principal_directions(const Eigen::MatrixXd& xc, std::size_t bits, std::mt19937_64& rng) {
  const Eigen::Index d = xc.cols();
  const Eigen::MatrixXd cov = (xc.transpose() * xc) / static_cast<double>(xc.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw Error("PCA eigendecomposition failed");

  const Eigen::VectorXd& values = eig.eigenvalues();  // ascending
  const double top = std::max(values(d - 1), 0.0);
  const auto b = static_cast<Eigen::Index>(bits);
  Eigen::MatrixXd dirs(b, d);
  Eigen::Index usable = 0;
  for (Eigen::Index k = 0; k < b; ++k) {
    const Eigen::Index col = d - 1 - k;
    if (!(values(col) > top * 1e-10) || !(values(col) > 0.0)) break;
    dirs.row(k) = eig.eigenvectors().col(col).transpose();
    ++usable;
  }
  if (usable < b) {
    warn("covariance has " + std::to_string(usable) + " usable components for " + std::to_string(bits) +
         " bits; filling the rest with random orthonormal directions");
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (Eigen::Index k = usable; k < b; ++k) {
      Eigen::VectorXd v(d);
      for (;;) {
        for (Eigen::Index j = 0; j < d; ++j) v(j) = gauss(rng);
        for (int pass = 0; pass < 2; ++pass) {
          for (Eigen::Index p = 0; p < k; ++p) v -= dirs.row(p).dot(v) * dirs.row(p).transpose();
        }
        const double norm = v.norm();
        if (norm > 1e-8) {
          dirs.row(k) = (v / norm).transpose();
          break;
        }
      }
    }
  }
  return dirs;
}

double quantization_loss(const Eigen::MatrixXd& z) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double v = z.data()[i];
    const double diff = (v >= 0.0 ? 1.0 : -1.0) - v;
    loss += diff * diff;
  }
  return loss;
}

}  // namespace

HashFamily parse_family(const std::string& name) {
  if (name == "lsh") return HashFamily::kLsh;
  if (name == "pcah") return HashFamily::kPcah;
  if (name == "itq") return HashFamily::kItq;
  throw Error("unknown hash family '" + name + "' (expected lsh, pcah or itq)");
}

std::string family_name(HashFamily family) {
  switch (family) {
    case HashFamily::kLsh: return "lsh";
    case HashFamily::kPcah: return "pcah";
    case HashFamily::kItq: return "itq";
  }
  return "unknown";
}

HashModel::HashModel(HashFamily family, Eigen::VectorXd mean, Eigen::MatrixXd projection,
                     Eigen::MatrixXd rotation)
    : family_(family), mean_(std::move(mean)), projection_(std::move(projection)), rotation_(std::move(rotation)) {
  if (projection_.rows() == 0 || projection_.cols() == 0) throw Error("hash model has an empty projection");
  if (mean_.size() != projection_.cols()) throw Error("hash model mean/projection dimension mismatch");
  if (rotation_.rows() != projection_.rows() || rotation_.cols() != projection_.rows()) {
    throw Error("hash model rotation must be B x B");
  }
  encoder_ = rotation_ * projection_;
}

Eigen::VectorXd HashModel::project(std::span<const float> x) const {
  if (x.size() != dim()) {
    throw Error("vector has dimension " + std::to_string(x.size()) + ", model expects " + std::to_string(dim()));
  }
  const Eigen::VectorXd xc =
      Eigen::Map<const Eigen::VectorXf>(x.data(), static_cast<Eigen::Index>(x.size())).cast<double>() - mean_;
  return encoder_ * xc;
}

HashModel train(HashFamily family, const Matrix& data, const TrainOptions& options,
                std::vector<double>* loss_history) {
  const std::size_t bits = options.bits;
  const auto d = static_cast<std::size_t>(data.cols());
  if (bits == 0) throw Error("bits must be >= 1");
  if (data.rows() == 0 || d == 0) throw Error("training matrix is empty");
  if (family != HashFamily::kLsh && bits > d) {
    throw Error(family_name(family) + " needs bits <= dimension (" + std::to_string(bits) + " > " +
                std::to_string(d) + ")");
  }

  auto rng = make_rng(options.seed, 0x4a5u + static_cast<std::uint64_t>(family));
  const Eigen::VectorXd mean = data.cast<double>().colwise().mean().transpose();
  const auto b = static_cast<Eigen::Index>(bits);

  if (family == HashFamily::kLsh) {
    return HashModel(family, mean, gaussian_matrix(b, static_cast<Eigen::Index>(d), rng),
                     Eigen::MatrixXd::Identity(b, b));
  }

  const Eigen::MatrixXd xc = centered(data, mean);
  Eigen::MatrixXd pca = principal_directions(xc, bits, rng);
  if (family == HashFamily::kPcah) {
    return HashModel(family, mean, std::move(pca), Eigen::MatrixXd::Identity(b, b));
  }

  // ITQ: minimise ||Bin - V R^T||_F^2 over Bin in {-1,+1} and orthogonal R.
  const Eigen::MatrixXd v = xc * pca.transpose();
  Eigen::MatrixXd rotation = random_orthogonal(b, rng);
  if (loss_history) loss_history->clear();
  Eigen::MatrixXd z = v * rotation.transpose();
  if (loss_history) loss_history->push_back(quantization_loss(z));
  for (std::size_t iter = 0; iter < options.itq_iters; ++iter) {
    const Eigen::MatrixXd sign = z.unaryExpr([](double x) { return x >= 0.0 ? 1.0 : -1.0; });
    const Eigen::MatrixXd c = sign.transpose() * v;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(c, Eigen::ComputeFullU | Eigen::ComputeFullV);
    rotation = svd.matrixU() * svd.matrixV().transpose();
    z = v * rotation.transpose();
    if (loss_history) loss_history->push_back(quantization_loss(z));
  }
  return HashModel(family, mean, std::move(pca), std::move(rotation));
}

std::vector<std::uint64_t> encode_one(const HashModel& model, std::span<const float> x) {
  const Eigen::VectorXd y = model.project(x);
  std::vector<std::uint64_t> words((model.bits() + 63) / 64, 0);
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    if (y(k) >= 0.0) words[static_cast<std::size_t>(k) / 64] |= std::uint64_t{1} << (k % 64);
  }
  return words;
}

PackedCodes encode(const HashModel& model, const Matrix& data) {
  if (static_cast<std::size_t>(data.cols()) != model.dim()) {
    throw Error("data has dimension " + std::to_string(data.cols()) + ", model expects " +
                std::to_string(model.dim()));
  }
  const auto n = static_cast<std::size_t>(data.rows());
  PackedCodes codes(n, model.bits());
  constexpr std::size_t kBlock = 256;
  parallel_for((n + kBlock - 1) / kBlock, [&](std::size_t block) {
    const std::size_t end = std::min(n, (block + 1) * kBlock);
    for (std::size_t i = block * kBlock; i < end; ++i) {
      const auto words = encode_one(model, {data.row(static_cast<Eigen::Index>(i)).data(), model.dim()});
      std::copy(words.begin(), words.end(), codes.row(i).begin());
    }
  });
  return codes;
}

std::uint32_t hamming(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  if (a.size() != b.size()) throw Error("hamming: code lengths differ");
  std::uint32_t d = 0;
  simd::active_kernels().hamming_scan(a.data(), 1, a.size(), b.data(), &d);
  return d;
}

std::uint32_t hamming(const PackedCodes& codes, std::size_t i, std::size_t j) {
  return hamming(codes.row(i), codes.row(j));
}

std::vector<ScoredId> hamming_rank(const PackedCodes& codes, std::span<const std::uint64_t> query_code,
                                   std::size_t k) {
  if (query_code.size() != codes.words_per_item()) throw Error("hamming_rank: query code length mismatch");
  const std::size_t n = codes.size();
  k = std::min(k, n);
  std::vector<std::uint32_t> dist(n);
  simd::active_kernels().hamming_scan(codes.data(), n, codes.words_per_item(), query_code.data(), dist.data());

  // Counting sort on the distance keeps ids ascending inside each bucket.
  std::vector<std::size_t> start(codes.bits() + 2, 0);
  for (std::uint32_t d : dist) ++start[d + 1];
  std::partial_sum(start.begin(), start.end(), start.begin());
  std::vector<ItemId> order(n);
  for (std::size_t i = 0; i < n; ++i) order[start[dist[i]]++] = static_cast<ItemId>(i);

  std::vector<ScoredId> out(k);
  for (std::size_t r = 0; r < k; ++r) out[r] = {order[r], static_cast<double>(dist[order[r]])};
  return out;
}

std::vector<ScoredId> top_k_ascending(std::span<const double> distances, std::size_t k) {
  std::vector<ScoredId> all(distances.size());
  for (std::size_t i = 0; i < distances.size(); ++i) all[i] = {static_cast<ItemId>(i), distances[i]};
  k = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), ascending_score);
  all.resize(k);
  return all;
}

void save_model(const std::string& path, const HashModel& model) {
  io::Writer out(path);
  out.magic("MVHM");
  out.put(std::uint32_t{1});
  out.put(static_cast<std::uint32_t>(model.family()));
  out.put(static_cast<std::uint32_t>(model.dim()));
  out.put(static_cast<std::uint32_t>(model.bits()));
  out.put_array(std::span<const double>(model.mean().data(), model.dim()));
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> proj = model.projection();
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rot = model.rotation();
  out.put_array(std::span<const double>(proj.data(), static_cast<std::size_t>(proj.size())));
  out.put_array(std::span<const double>(rot.data(), static_cast<std::size_t>(rot.size())));
  out.close();
}

HashModel load_model(const std::string& path) {
  io::Reader in(path);
  in.expect_magic("MVHM");
  if (const auto version = in.get<std::uint32_t>(); version != 1) {
    throw Error("'" + path + "': unsupported model version " + std::to_string(version));
  }
  const auto family = in.get<std::uint32_t>();
  if (family > 2) throw Error("'" + path + "': unknown family tag " + std::to_string(family));
  const auto d = static_cast<Eigen::Index>(in.get<std::uint32_t>());
  const auto b = static_cast<Eigen::Index>(in.get<std::uint32_t>());
  if (in.remaining() != static_cast<std::uint64_t>(d + b * d + b * b) * 8) {
    throw Error("'" + path + "': model payload does not match header");
  }
  Eigen::VectorXd mean(d);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> proj(b, d), rot(b, b);
  in.get_array(std::span<double>(mean.data(), static_cast<std::size_t>(d)));
  in.get_array(std::span<double>(proj.data(), static_cast<std::size_t>(proj.size())));
  in.get_array(std::span<double>(rot.data(), static_cast<std::size_t>(rot.size())));
  return HashModel(static_cast<HashFamily>(family), std::move(mean), proj, rot);
}

}  // namespace mvhash::hashing
