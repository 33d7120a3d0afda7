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

// Attribution by patch marginalization: for every patch the classifier is
// re-evaluated with the patch replaced by sampler draws, and the change in
// the posterior is scored as PMI (per class) and IG (over all classes).

#pragma once

#include <cstdint>
#include <vector>

#include "infoattr/attribution_map.hpp"
#include "infoattr/classifier.hpp"
#include "infoattr/information.hpp"
#include "infoattr/prediction.hpp"
#include "infoattr/sampler.hpp"

namespace infoattr {

// Explicit class indices win; otherwise the top_k classes of the original
// prediction are explained.
struct ClassSelection {
  std::vector<int> indices;
  int top_k = 1;
};

struct EngineConfig {
  int patch_size = 8;
  int samples = 8;
  int stride = 0;  // 0 means patch_size
  double eps = kDefaultEps;
  ClassSelection classes;
  std::uint64_t seed = 0;
  int workers = 1;

  int effective_stride() const { return stride > 0 ? stride : patch_size; }
};

// Throws kInvalidArgument for N < 1, eps <= 0, or an empty/out-of-range
// class list.
void validate(const EngineConfig& config);

std::vector<int> resolve_classes(const ClassSelection& selection,
                                 const Prediction& original);

// Seed for patch `index`, independent of evaluation order.
std::uint64_t patch_seed(std::uint64_t seed, std::size_t index);

// Monte-Carlo estimate of p(Y | image without the patch): the mean of the
// classifier outputs over `samples` images whose patch is replaced by draws
// from `sampler`. The classifier sees all draws as one batch.
Prediction marginal_prediction(const Classifier& classifier,
                               const Sampler& sampler, const Image& image,
                               Origin origin, int samples, std::uint64_t seed);

// Exact expectation over an enumerable sampler's support. Throws
// kUnsupportedOracle for non-enumerable samplers.
Prediction exact_marginal_prediction(const Classifier& classifier,
                                     const Sampler& sampler, const Image& image,
                                     Origin origin);

inline double ig(const Prediction& full, const Prediction& marg, double eps) {
  return ig(full.probs(), marg.probs(), eps);
}

struct PatchRecord {
  Origin origin;
  Prediction marginal;
  std::vector<double> pmi;  // one per explained class
  double ig = 0.0;
};

struct ExplanationResult {
  Prediction original;
  std::vector<int> classes;
  std::vector<AttributionMap> pmi_maps;  // parallel to `classes`
  AttributionMap ig_map;
  PatchGrid grid;
  std::vector<PatchRecord> patches;
};

ExplanationResult explain(const Classifier& classifier, const Sampler& sampler,
                          const Image& image, const EngineConfig& config);

// p(c | x) - p(c | x with the patch filled by `fill`), c the first
// configured class.
AttributionMap occlusion_map(const Classifier& classifier, const Image& image,
                             std::uint8_t fill, const EngineConfig& config);

// Weight of evidence between the original and the marginal prediction, with
// the marginal taken under `sampler` (a conditional Gaussian in the classic
// setting), c the first configured class.
AttributionMap pda_map(const Classifier& classifier, const Sampler& sampler,
                       const Image& image, const EngineConfig& config);

}  // namespace infoattr
