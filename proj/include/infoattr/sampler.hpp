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

// Conditional patch distributions p(patch | surrounding context).

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "infoattr/image.hpp"
#include "infoattr/wire.hpp"

namespace infoattr {

struct WeightedPatch {
  PatchBytes patch;
  double probability = 0.0;
};

class Sampler {
 public:
  virtual ~Sampler() = default;

  virtual int patch_size() const = 0;
  virtual int channels() const = 0;
  virtual std::string id() const = 0;
  // True when support_of() exposes the full outcome distribution.
  virtual bool enumerable() const { return false; }

  // Context geometry is validated by sample() before this is called. Must be
  // deterministic in (context, n, seed) and safe to call concurrently.
  virtual std::vector<PatchBytes> sample_patches(const ContextWindow& context,
                                                 int n,
                                                 std::uint64_t seed) const = 0;
  virtual std::optional<std::vector<WeightedPatch>> support_of(
      const ContextWindow&) const {
    return std::nullopt;
  }
};

// n patches of K x K x C bytes. Throws kInvalidArgument on a K/C mismatch or
// n < 1.
std::vector<PatchBytes> sample(const Sampler& sampler,
                               const ContextWindow& context, int n,
                               std::uint64_t seed);

// Outcome list with probabilities, or nullopt for non-enumerable samplers.
std::optional<std::vector<WeightedPatch>> support(const Sampler& sampler,
                                                  const ContextWindow& context);

// Constant fill, one byte per channel.
class ReferenceSampler final : public Sampler {
 public:
  ReferenceSampler(int patch_size, std::vector<std::uint8_t> fill);
  ReferenceSampler(int patch_size, int channels, std::uint8_t fill)
      : ReferenceSampler(patch_size,
                         std::vector<std::uint8_t>(channels, fill)) {}

  int patch_size() const override { return patch_size_; }
  int channels() const override { return static_cast<int>(fill_.size()); }
  std::string id() const override;
  bool enumerable() const override { return true; }
  std::vector<PatchBytes> sample_patches(const ContextWindow& context, int n,
                                         std::uint64_t seed) const override;
  std::optional<std::vector<WeightedPatch>> support_of(
      const ContextWindow& context) const override;

 private:
  PatchBytes fill_patch() const;

  int patch_size_;
  std::vector<std::uint8_t> fill_;
};

// Returns the hidden patch itself; marginalizing with it must leave every
// prediction unchanged.
class IdentitySampler final : public Sampler {
 public:
  IdentitySampler(int patch_size, int channels)
      : patch_size_(patch_size), channels_(channels) {}

  int patch_size() const override { return patch_size_; }
  int channels() const override { return channels_; }
  std::string id() const override { return "identity"; }
  bool enumerable() const override { return true; }
  std::vector<PatchBytes> sample_patches(const ContextWindow& context, int n,
                                         std::uint64_t seed) const override;
  std::optional<std::vector<WeightedPatch>> support_of(
      const ContextWindow& context) const override;

 private:
  int patch_size_;
  int channels_;
};

// The ring of eight K x K blocks around the hidden patch, visited clockwise
// from the top-left block, is averaged into `cells` groups per channel.
struct DescriptorConfig {
  int cells = 8;   // one of 1, 2, 4, 8
  int levels = 4;  // quantization levels for dictionary keys

  friend bool operator==(const DescriptorConfig&,
                         const DescriptorConfig&) = default;
};

// cells x channels means in byte units, cell-major.
Eigen::VectorXd context_descriptor(const ContextWindow& context, int cells);

using DescriptorKey = std::vector<std::uint8_t>;

DescriptorKey quantize_descriptor(const Eigen::VectorXd& descriptor,
                                  int levels);

struct EmpiricalConfig {
  DescriptorConfig descriptor;
  int max_patches_per_bucket = 64;
  int min_total_patches = 1;
  int stride = 0;  // 0 means K
  std::uint64_t seed = 0;
};

// Patch dictionary keyed by the quantized context descriptor. Queries without
// an exact bucket fall back to the nearest key in L1, ties to the lowest key.
class EmpiricalPatchModel final : public Sampler {
 public:
  using Buckets = std::map<DescriptorKey, std::vector<PatchBytes>>;

  EmpiricalPatchModel(int patch_size, int channels, DescriptorConfig descriptor,
                      Buckets buckets);

  int patch_size() const override { return patch_size_; }
  int channels() const override { return channels_; }
  std::string id() const override;
  bool enumerable() const override { return true; }
  std::vector<PatchBytes> sample_patches(const ContextWindow& context, int n,
                                         std::uint64_t seed) const override;
  std::optional<std::vector<WeightedPatch>> support_of(
      const ContextWindow& context) const override;

  const DescriptorConfig& descriptor() const { return descriptor_; }
  const Buckets& buckets() const { return buckets_; }
  std::size_t total_patches() const;

  const std::vector<PatchBytes>& bucket_for(const DescriptorKey& key) const;
  const std::vector<PatchBytes>& bucket_for(const ContextWindow& context) const;

 private:
  int patch_size_;
  int channels_;
  DescriptorConfig descriptor_;
  Buckets buckets_;
};

EmpiricalPatchModel build_empirical_sampler(std::span<const Image> images,
                                            int patch_size,
                                            const EmpiricalConfig& config);

struct GaussianConfig {
  int cells = 8;
  double jitter = 1e-2;
  int stride = 0;  // 0 means K
};

// Joint Gaussian over (patch bytes, context descriptor). Sampling conditions
// on the descriptor through the Schur complement; draws are rounded and
// clamped to bytes.
class ConditionalGaussianModel final : public Sampler {
 public:
  // `covariance` excludes jitter; jitter is added to its diagonal. Throws
  // kDegenerateData when the regularized covariance is not positive
  // definite.
  ConditionalGaussianModel(int patch_size, int channels, int cells,
                           Eigen::VectorXd mean, Eigen::MatrixXd covariance,
                           double jitter);

  int patch_size() const override { return patch_size_; }
  int channels() const override { return channels_; }
  std::string id() const override;
  std::vector<PatchBytes> sample_patches(const ContextWindow& context, int n,
                                         std::uint64_t seed) const override;

  int cells() const { return cells_; }
  double jitter() const { return jitter_; }
  int patch_dim() const { return patch_dim_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return covariance_; }

  Eigen::VectorXd conditional_mean(const Eigen::VectorXd& descriptor) const;
  Eigen::VectorXd conditional_mean(const ContextWindow& context) const;
  const Eigen::MatrixXd& conditional_covariance() const { return cond_cov_; }

 private:
  int patch_size_;
  int channels_;
  int cells_;
  int patch_dim_;
  double jitter_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd covariance_;
  Eigen::MatrixXd gain_;
  Eigen::MatrixXd cond_cov_;
  Eigen::MatrixXd cond_sqrt_;
};

// Throws kDegenerateData with fewer than (feature dimension + 1) patches.
ConditionalGaussianModel fit_conditional_gaussian(std::span<const Image> images,
                                                  int patch_size,
                                                  const GaussianConfig& config);

// Client for a sampler served over the wire protocol. Not enumerable.
class ExternalSampler final : public Sampler {
 public:
  ExternalSampler(std::unique_ptr<LineChannel> channel, std::string id,
                  std::chrono::milliseconds timeout = kDefaultRequestTimeout);

  int patch_size() const override { return patch_size_; }
  int channels() const override { return channels_; }
  std::string id() const override { return id_; }
  std::vector<PatchBytes> sample_patches(const ContextWindow& context, int n,
                                         std::uint64_t seed) const override;

 private:
  mutable WireClient client_;
  std::string id_;
  int patch_size_ = 0;
  int channels_ = 0;
};

// Binary container: 8-byte magic, little-endian u64 header length, JSON
// header, payload.
inline constexpr char kSamplerMagic[] = "IATSMPL1";

void save_sampler(const EmpiricalPatchModel& model,
                  const std::filesystem::path& path);
void save_sampler(const ConditionalGaussianModel& model,
                  const std::filesystem::path& path);
std::unique_ptr<Sampler> load_sampler(const std::filesystem::path& path);

std::string serialize_sampler(const EmpiricalPatchModel& model);
std::string serialize_sampler(const ConditionalGaussianModel& model);
std::unique_ptr<Sampler> deserialize_sampler(std::string_view bytes);

}  // namespace infoattr
