/*
 * Copyright 2026 The InfoAttr Authors.
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

#include "infoattr/sampler.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <random>

#include "infoattr/errors.hpp"
#include "infoattr/file_io.hpp"

namespace infoattr {
namespace {

using json = nlohmann::json;

// Ring blocks of the 3 x 3 block layout, clockwise from the top-left.
constexpr int kRingBlocks[8][2] = {{0, 0}, {0, 1}, {0, 2}, {1, 2},
                                   {2, 2}, {2, 1}, {2, 0}, {1, 0}};

std::size_t patch_bytes(int k, int c) {
  return static_cast<std::size_t>(k) * k * c;
}

void check_cells(int cells) {
  if (cells != 1 && cells != 2 && cells != 4 && cells != 8) {
    fail(ErrorCode::kInvalidArgument,
         "descriptor cells must be 1, 2, 4 or 8, got " + std::to_string(cells));
  }
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
}

}  // namespace

std::vector<PatchBytes> sample(const Sampler& sampler,
                               const ContextWindow& context, int n,
                               std::uint64_t seed) {
  if (context.patch_size() != sampler.patch_size() ||
      context.channels() != sampler.channels()) {
    fail(ErrorCode::kInvalidArgument,
         fmt::format("context is K={} C={}, sampler {} expects K={} C={}",
                     context.patch_size(), context.channels(), sampler.id(),
                     sampler.patch_size(), sampler.channels()));
  }
  if (n < 1) fail(ErrorCode::kInvalidArgument, "sample count must be >= 1");
  auto out = sampler.sample_patches(context, n, seed);
  const std::size_t expected =
      patch_bytes(sampler.patch_size(), sampler.channels());
  if (out.size() != static_cast<std::size_t>(n) ||
      std::any_of(out.begin(), out.end(),
                  [&](const PatchBytes& p) { return p.size() != expected; })) {
    fail(ErrorCode::kProtocol,
         "sampler " + sampler.id() + " returned malformed patches");
  }
  return out;
}

std::optional<std::vector<WeightedPatch>> support(
    const Sampler& sampler, const ContextWindow& context) {
  if (context.patch_size() != sampler.patch_size() ||
      context.channels() != sampler.channels()) {
    fail(ErrorCode::kInvalidArgument,
         "context does not match sampler geometry");
  }
  if (!sampler.enumerable()) return std::nullopt;
  return sampler.support_of(context);
}

// --- reference / identity ---------------------------------------------------

ReferenceSampler::ReferenceSampler(int patch_size,
                                   std::vector<std::uint8_t> fill)
    : patch_size_(patch_size), fill_(std::move(fill)) {
  if (patch_size_ < 1 || (fill_.size() != 1 && fill_.size() != 3)) {
    fail(ErrorCode::kInvalidArgument,
         "reference sampler needs K >= 1 and a "
         "fill for 1 or 3 channels");
  }
}

std::string ReferenceSampler::id() const {
  std::string s = "reference:";
  for (std::size_t i = 0; i < fill_.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(fill_[i]);
  }
  return s;
}

PatchBytes ReferenceSampler::fill_patch() const {
  PatchBytes p;
  p.reserve(patch_bytes(patch_size_, channels()));
  for (int i = 0; i < patch_size_ * patch_size_; ++i) {
    p.insert(p.end(), fill_.begin(), fill_.end());
  }
  return p;
}

std::vector<PatchBytes> ReferenceSampler::sample_patches(const ContextWindow&,
                                                         int n,
                                                         std::uint64_t) const {
  return std::vector<PatchBytes>(n, fill_patch());
}

std::optional<std::vector<WeightedPatch>> ReferenceSampler::support_of(
    const ContextWindow&) const {
  return std::vector<WeightedPatch>{{fill_patch(), 1.0}};
}

std::vector<PatchBytes> IdentitySampler::sample_patches(
    const ContextWindow& context, int n, std::uint64_t) const {
  return std::vector<PatchBytes>(n, context.center_patch());
}

std::optional<std::vector<WeightedPatch>> IdentitySampler::support_of(
    const ContextWindow& context) const {
  return std::vector<WeightedPatch>{{context.center_patch(), 1.0}};
}

// --- descriptors ------------------------------------------------------------

Eigen::VectorXd context_descriptor(const ContextWindow& context, int cells) {
  check_cells(cells);
  const int k = context.patch_size();
  const int ch = context.channels();
  const int blocks_per_cell = 8 / cells;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(cells * ch);
  for (int b = 0; b < 8; ++b) {
    const int cell = b / blocks_per_cell;
    const int r0 = kRingBlocks[b][0] * k;
    const int c0 = kRingBlocks[b][1] * k;
    for (int r = r0; r < r0 + k; ++r) {
      for (int c = c0; c < c0 + k; ++c) {
        for (int j = 0; j < ch; ++j) out[cell * ch + j] += context.at(r, c, j);
      }
    }
  }
  return out / static_cast<double>(blocks_per_cell * k * k);
}

DescriptorKey quantize_descriptor(const Eigen::VectorXd& descriptor,
                                  int levels) {
  if (levels < 1 || levels > 256) {
    fail(ErrorCode::kInvalidArgument, "quantization levels must be in [1,256]");
  }
  DescriptorKey key(static_cast<std::size_t>(descriptor.size()));
  for (Eigen::Index i = 0; i < descriptor.size(); ++i) {
    const int q = static_cast<int>(std::floor(descriptor[i] * levels / 256.0));
    key[i] = static_cast<std::uint8_t>(std::clamp(q, 0, levels - 1));
  }
  return key;
}

// --- empirical dictionary ---------------------------------------------------

EmpiricalPatchModel::EmpiricalPatchModel(int patch_size, int channels,
                                         DescriptorConfig descriptor,
                                         Buckets buckets)
    : patch_size_(patch_size),
      channels_(channels),
      descriptor_(descriptor),
      buckets_(std::move(buckets)) {
  check_cells(descriptor_.cells);
  if (buckets_.empty()) {
    fail(ErrorCode::kDegenerateData, "empirical sampler has no buckets");
  }
  const std::size_t key_len =
      static_cast<std::size_t>(descriptor_.cells) * channels_;
  const std::size_t bytes = patch_bytes(patch_size_, channels_);
  for (const auto& [key, patches] : buckets_) {
    if (key.size() != key_len || patches.empty()) {
      fail(ErrorCode::kDegenerateData, "empirical sampler bucket is malformed");
    }
    for (const auto& p : patches) {
      if (p.size() != bytes) {
        fail(ErrorCode::kDegenerateData, "stored patch has the wrong size");
      }
    }
  }
}

std::string EmpiricalPatchModel::id() const {
  return fmt::format("empirical:K={},D={},Q={},buckets={},patches={}",
                     patch_size_, descriptor_.cells, descriptor_.levels,
                     buckets_.size(), total_patches());
}

std::size_t EmpiricalPatchModel::total_patches() const {
  std::size_t n = 0;
  for (const auto& [key, patches] : buckets_) n += patches.size();
  return n;
}

const std::vector<PatchBytes>& EmpiricalPatchModel::bucket_for(
    const DescriptorKey& key) const {
  if (auto it = buckets_.find(key); it != buckets_.end()) return it->second;
  const std::vector<PatchBytes>* best = nullptr;
  long best_distance = std::numeric_limits<long>::max();
  for (const auto& [candidate, patches] : buckets_) {
    long d = 0;
    for (std::size_t i = 0; i < key.size(); ++i) {
      d +=
          std::abs(static_cast<long>(key[i]) - static_cast<long>(candidate[i]));
    }
    if (d < best_distance) {
      best_distance = d;
      best = &patches;
    }
  }
  return *best;
}

const std::vector<PatchBytes>& EmpiricalPatchModel::bucket_for(
    const ContextWindow& context) const {
  return bucket_for(quantize_descriptor(
      context_descriptor(context, descriptor_.cells), descriptor_.levels));
}

std::vector<PatchBytes> EmpiricalPatchModel::sample_patches(
    const ContextWindow& context, int n, std::uint64_t seed) const {
  const auto& bucket = bucket_for(context);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, bucket.size() - 1);
  std::vector<PatchBytes> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(bucket[pick(rng)]);
  return out;
}

std::optional<std::vector<WeightedPatch>> EmpiricalPatchModel::support_of(
    const ContextWindow& context) const {
  const auto& bucket = bucket_for(context);
  const double p = 1.0 / static_cast<double>(bucket.size());
  std::vector<WeightedPatch> out;
  out.reserve(bucket.size());
  for (const auto& patch : bucket) out.push_back({patch, p});
  return out;
}

EmpiricalPatchModel build_empirical_sampler(std::span<const Image> images,
                                            int patch_size,
                                            const EmpiricalConfig& config) {
  if (images.empty()) {
    fail(ErrorCode::kDegenerateData, "empirical sampler needs training images");
  }
  if (config.max_patches_per_bucket < 1) {
    fail(ErrorCode::kInvalidArgument, "max_patches_per_bucket must be >= 1");
  }
  const int channels = images.front().channels();
  const int stride = config.stride > 0 ? config.stride : patch_size;
  EmpiricalPatchModel::Buckets buckets;
  std::map<DescriptorKey, std::size_t> seen;
  std::mt19937_64 rng(config.seed);
  for (const Image& image : images) {
    if (image.channels() != channels) {
      fail(ErrorCode::kInvalidArgument, "training images differ in channels");
    }
    const PatchGrid grid =
        build_patch_grid(image.height(), image.width(), patch_size, stride);
    for (const Origin o : grid.origins) {
      const ContextWindow ctx = extract_context(image, o, patch_size);
      DescriptorKey key =
          quantize_descriptor(context_descriptor(ctx, config.descriptor.cells),
                              config.descriptor.levels);
      auto& bucket = buckets[key];
      const std::size_t count = ++seen[key];
      // Reservoir sampling keeps a uniform subset of each bucket's stream.
      if (bucket.size() <
          static_cast<std::size_t>(config.max_patches_per_bucket)) {
        bucket.push_back(ctx.center_patch());
      } else {
        std::uniform_int_distribution<std::size_t> slot(0, count - 1);
        const std::size_t j = slot(rng);
        if (j < bucket.size()) bucket[j] = ctx.center_patch();
      }
    }
  }
  EmpiricalPatchModel model(patch_size, channels, config.descriptor,
                            std::move(buckets));
  if (model.total_patches() <
      static_cast<std::size_t>(std::max(config.min_total_patches, 1))) {
    fail(ErrorCode::kDegenerateData,
         fmt::format("empirical sampler stores {} patches, {} required",
                     model.total_patches(), config.min_total_patches));
  }
  return model;
}

// --- conditional Gaussian ---------------------------------------------------

ConditionalGaussianModel::ConditionalGaussianModel(int patch_size, int channels,
                                                   int cells,
                                                   Eigen::VectorXd mean,
                                                   Eigen::MatrixXd covariance,
                                                   double jitter)
    : patch_size_(patch_size),
      channels_(channels),
      cells_(cells),
      patch_dim_(static_cast<int>(patch_bytes(patch_size, channels))),
      jitter_(jitter),
      mean_(std::move(mean)),
      covariance_(std::move(covariance)) {
  check_cells(cells_);
  const int dim = patch_dim_ + cells_ * channels_;
  if (mean_.size() != dim || covariance_.rows() != dim ||
      covariance_.cols() != dim) {
    fail(ErrorCode::kInvalidArgument,
         fmt::format("Gaussian moments must have dimension {}", dim));
  }
  if (!(jitter_ >= 0.0) || !mean_.allFinite() || !covariance_.allFinite()) {
    fail(ErrorCode::kInvalidArgument, "Gaussian moments must be finite");
  }
  Eigen::MatrixXd joint = 0.5 * (covariance_ + covariance_.transpose());
  joint.diagonal().array() += jitter_;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> joint_eig(
      joint, Eigen::EigenvaluesOnly);
  const double top = std::max(joint_eig.eigenvalues().maxCoeff(), 1.0);
  if (joint_eig.eigenvalues().minCoeff() <= 1e-10 * top) {
    fail(ErrorCode::kDegenerateData,
         "Gaussian covariance is singular; increase jitter or data");
  }

  const int p = patch_dim_;
  const int q = dim - p;
  const Eigen::MatrixXd s_pp = joint.topLeftCorner(p, p);
  const Eigen::MatrixXd s_pd = joint.topRightCorner(p, q);
  const Eigen::MatrixXd s_dd = joint.bottomRightCorner(q, q);
  const Eigen::LLT<Eigen::MatrixXd> dd(s_dd);
  if (dd.info() != Eigen::Success) {
    fail(ErrorCode::kDegenerateData, "descriptor covariance is singular");
  }
  gain_ = dd.solve(s_pd.transpose()).transpose();
  cond_cov_ = s_pp - gain_ * s_pd.transpose();
  cond_cov_ = 0.5 * (cond_cov_ + cond_cov_.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cond_cov_);
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  cond_sqrt_ = eig.eigenvectors() * root.asDiagonal();
}

std::string ConditionalGaussianModel::id() const {
  return fmt::format("gaussian:K={},D={},jitter={}", patch_size_, cells_,
                     jitter_);
}

Eigen::VectorXd ConditionalGaussianModel::conditional_mean(
    const Eigen::VectorXd& descriptor) const {
  const int q = static_cast<int>(mean_.size()) - patch_dim_;
  if (descriptor.size() != q) {
    fail(ErrorCode::kInvalidArgument, "descriptor has the wrong dimension");
  }
  return mean_.head(patch_dim_) + gain_ * (descriptor - mean_.tail(q));
}

Eigen::VectorXd ConditionalGaussianModel::conditional_mean(
    const ContextWindow& context) const {
  return conditional_mean(context_descriptor(context, cells_));
}

std::vector<PatchBytes> ConditionalGaussianModel::sample_patches(
    const ContextWindow& context, int n, std::uint64_t seed) const {
  const Eigen::VectorXd mu = conditional_mean(context);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(patch_dim_);
  std::vector<PatchBytes> out;
  out.reserve(n);
  for (int s = 0; s < n; ++s) {
    for (int i = 0; i < patch_dim_; ++i) z[i] = normal(rng);
    const Eigen::VectorXd x = mu + cond_sqrt_ * z;
    PatchBytes patch(patch_dim_);
    for (int i = 0; i < patch_dim_; ++i) patch[i] = to_byte(x[i]);
    out.push_back(std::move(patch));
  }
  return out;
}

ConditionalGaussianModel fit_conditional_gaussian(
    std::span<const Image> images, int patch_size,
    const GaussianConfig& config) {
  check_cells(config.cells);
  if (images.empty()) {
    fail(ErrorCode::kDegenerateData, "Gaussian fit needs training images");
  }
  const int channels = images.front().channels();
  const int stride = config.stride > 0 ? config.stride : patch_size;
  const int p = static_cast<int>(patch_bytes(patch_size, channels));
  const int dim = p + config.cells * channels;

  std::vector<Eigen::VectorXd> rows;
  for (const Image& image : images) {
    if (image.channels() != channels) {
      fail(ErrorCode::kInvalidArgument, "training images differ in channels");
    }
    const PatchGrid grid =
        build_patch_grid(image.height(), image.width(), patch_size, stride);
    for (const Origin o : grid.origins) {
      const ContextWindow ctx = extract_context(image, o, patch_size);
      Eigen::VectorXd f(dim);
      const PatchBytes patch = ctx.center_patch();
      for (int i = 0; i < p; ++i) f[i] = patch[i];
      f.tail(dim - p) = context_descriptor(ctx, config.cells);
      rows.push_back(std::move(f));
    }
  }
  if (rows.size() < static_cast<std::size_t>(dim) + 1) {
    fail(ErrorCode::kDegenerateData,
         fmt::format("Gaussian fit has {} patches, needs at least {}",
                     rows.size(), dim + 1));
  }
  Eigen::MatrixXd data(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t i = 0; i < rows.size(); ++i) data.row(i) = rows[i];
  const Eigen::VectorXd mean = data.colwise().mean();
  const Eigen::MatrixXd centered = data.rowwise() - mean.transpose();
  const Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(data.rows() - 1);
  return ConditionalGaussianModel(patch_size, channels, config.cells, mean, cov,
                                  config.jitter);
}

// --- external ---------------------------------------------------------------

ExternalSampler::ExternalSampler(std::unique_ptr<LineChannel> channel,
                                 std::string id,
                                 std::chrono::milliseconds timeout)
    : client_(std::move(channel), timeout), id_(std::move(id)) {
  const json info = client_.call({{"op", "info"}});
  const long long msg = info["id"].get<long long>();
  try {
    patch_size_ = info.at("K").get<int>();
    channels_ = info.at("channels").get<int>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kProtocol,
         fmt::format("message {}: malformed sampler info: {}", msg, e.what()));
  }
  if (patch_size_ < 1 || (channels_ != 1 && channels_ != 3)) {
    fail(ErrorCode::kProtocol,
         fmt::format("message {}: invalid sampler geometry", msg));
  }
}

std::vector<PatchBytes> ExternalSampler::sample_patches(
    const ContextWindow& context, int n, std::uint64_t seed) const {
  const auto bytes = context.bytes();
  const json response = client_.call(
      {{"op", "sample"},
       {"n", n},
       {"seed", seed},
       {"context_shape", {context.side(), context.side(), channels_}},
       {"context",
        base64_encode(std::string_view(
            reinterpret_cast<const char*>(bytes.data()), bytes.size()))},
       {"mask_origin", {patch_size_, patch_size_}}});
  const long long msg = response["id"].get<long long>();
  if (!response.contains("patches") || !response["patches"].is_string()) {
    fail(ErrorCode::kProtocol,
         fmt::format("message {}: response lacks patches", msg));
  }
  const std::string raw = base64_decode(response["patches"].get<std::string>());
  const std::size_t each = patch_bytes(patch_size_, channels_);
  if (raw.size() != each * static_cast<std::size_t>(n)) {
    fail(ErrorCode::kProtocol,
         fmt::format("message {}: expected {} patch bytes, got {}", msg,
                     each * n, raw.size()));
  }
  std::vector<PatchBytes> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    out.emplace_back(raw.begin() + i * each, raw.begin() + (i + 1) * each);
  }
  return out;
}

// --- persistence ------------------------------------------------------------

namespace {

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view take(std::size_t n) {
    if (n > bytes_.size() - pos_) {
      fail(ErrorCode::kFormat, "sampler file is truncated");
    }
    const auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint64_t u64() {
    const auto b = take(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i)
      v = (v << 8) | static_cast<unsigned char>(b[i]);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::string container(const json& header, const std::string& payload) {
  const std::string h = header.dump();
  std::string out(kSamplerMagic, 8);
  put_u64(out, h.size());
  out += h;
  out += payload;
  return out;
}

}  // namespace

std::string serialize_sampler(const EmpiricalPatchModel& model) {
  json header = {{"kind", "empirical"},
                 {"K", model.patch_size()},
                 {"C", model.channels()},
                 {"descriptor",
                  {{"cells", model.descriptor().cells},
                   {"levels", model.descriptor().levels}}}};
  std::string payload;
  put_u64(payload, model.buckets().size());
  for (const auto& [key, patches] : model.buckets()) {
    payload.append(key.begin(), key.end());
    put_u64(payload, patches.size());
    for (const auto& p : patches) payload.append(p.begin(), p.end());
  }
  return container(header, payload);
}

std::string serialize_sampler(const ConditionalGaussianModel& model) {
  const auto dim = model.mean().size();
  json header = {
      {"kind", "gaussian"},       {"K", model.patch_size()},
      {"C", model.channels()},    {"descriptor", {{"cells", model.cells()}}},
      {"jitter", model.jitter()}, {"dim", dim}};
  std::string payload;
  for (Eigen::Index i = 0; i < dim; ++i) put_f64(payload, model.mean()[i]);
  for (Eigen::Index r = 0; r < dim; ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) {
      put_f64(payload, model.covariance()(r, c));
    }
  }
  return container(header, payload);
}

std::unique_ptr<Sampler> deserialize_sampler(std::string_view bytes) {
  Reader in(bytes);
  if (in.take(8) != std::string_view(kSamplerMagic, 8)) {
    fail(ErrorCode::kFormat, "not a sampler file (bad magic)");
  }
  const std::uint64_t header_len = in.u64();
  json header;
  try {
    header = json::parse(in.take(header_len));
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("bad sampler header: ") + e.what());
  }
  try {
    const std::string kind = header.at("kind").get<std::string>();
    const int k = header.at("K").get<int>();
    const int c = header.at("C").get<int>();
    const auto& desc = header.at("descriptor");
    if (k < 1 || (c != 1 && c != 3)) {
      fail(ErrorCode::kFormat, "sampler header has invalid geometry");
    }
    if (kind == "empirical") {
      DescriptorConfig cfg{desc.at("cells").get<int>(),
                           desc.at("levels").get<int>()};
      if (cfg.cells < 1 || cfg.cells > 8) {
        fail(ErrorCode::kFormat, "sampler header has invalid descriptor");
      }
      const std::size_t key_len = static_cast<std::size_t>(cfg.cells) * c;
      const std::size_t each = patch_bytes(k, c);
      EmpiricalPatchModel::Buckets buckets;
      const std::uint64_t nb = in.u64();
      for (std::uint64_t b = 0; b < nb; ++b) {
        const auto key = in.take(key_len);
        const std::uint64_t np = in.u64();
        std::vector<PatchBytes> patches;
        for (std::uint64_t i = 0; i < np; ++i) {
          const auto p = in.take(each);
          patches.emplace_back(p.begin(), p.end());
        }
        buckets.emplace(DescriptorKey(key.begin(), key.end()),
                        std::move(patches));
      }
      if (!in.done())
        fail(ErrorCode::kFormat, "trailing bytes in sampler file");
      return std::make_unique<EmpiricalPatchModel>(k, c, cfg,
                                                   std::move(buckets));
    }
    if (kind == "gaussian") {
      const int cells = desc.at("cells").get<int>();
      const auto dim = header.at("dim").get<Eigen::Index>();
      if (dim != static_cast<Eigen::Index>(patch_bytes(k, c)) + cells * c) {
        fail(ErrorCode::kFormat, "sampler header has inconsistent dimension");
      }
      Eigen::VectorXd mean(dim);
      for (Eigen::Index i = 0; i < dim; ++i) mean[i] = in.f64();
      Eigen::MatrixXd cov(dim, dim);
      for (Eigen::Index r = 0; r < dim; ++r) {
        for (Eigen::Index col = 0; col < dim; ++col) cov(r, col) = in.f64();
      }
      if (!in.done())
        fail(ErrorCode::kFormat, "trailing bytes in sampler file");
      return std::make_unique<ConditionalGaussianModel>(
          k, c, cells, std::move(mean), std::move(cov),
          header.at("jitter").get<double>());
    }
    fail(ErrorCode::kFormat, "unknown sampler kind '" + kind + "'");
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("bad sampler header: ") + e.what());
  }
}

void save_sampler(const EmpiricalPatchModel& model,
                  const std::filesystem::path& path) {
  write_file_atomic(path, serialize_sampler(model));
}

void save_sampler(const ConditionalGaussianModel& model,
                  const std::filesystem::path& path) {
  write_file_atomic(path, serialize_sampler(model));
}

std::unique_ptr<Sampler> load_sampler(const std::filesystem::path& path) {
  return deserialize_sampler(read_file(path));
}

}  // namespace infoattr
