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

#include "infoattr/engine.hpp"

#include <fmt/format.h>

#include <optional>
#include <set>

#include "infoattr/errors.hpp"
#include "infoattr/parallel.hpp"

namespace infoattr {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

MapMeta make_meta(const EngineConfig& config, const Classifier& classifier,
                  const std::string& sampler_id, int samples) {
  return {config.patch_size, samples,     config.effective_stride(),
          config.eps,        config.seed, sampler_id,
          classifier.id()};
}

void check_inputs(const Classifier& classifier, const Image& image,
                  const EngineConfig& config) {
  validate(config);
  if (image.shape() != classifier.input_shape()) {
    fail(ErrorCode::kInvalidInput,
         "image shape does not match the classifier input shape");
  }
}

// Runs per-patch jobs on the worker pool, tagging failures with the patch.
template <typename Job>
void for_each_patch(const PatchGrid& grid, int workers, Job&& job) {
  parallel_for(grid.size(), workers, [&](std::size_t i) {
    try {
      job(i);
    } catch (const Error& e) {
      const Origin o = grid.origins[i];
      throw Error(e.code(), fmt::format("patch {} at ({},{}): {}", i, o.row,
                                        o.col, e.what()));
    }
  });
}

// Per-patch score of one class from the marginal prediction.
template <typename Score>
AttributionMap class_map(const Classifier& classifier, const Sampler& sampler,
                         const Image& image, const EngineConfig& config,
                         MapKind kind, int samples, Score&& score) {
  check_inputs(classifier, image, config);
  if (sampler.patch_size() != config.patch_size) {
    fail(ErrorCode::kInvalidArgument,
         "sampler patch size does not match the configured K");
  }
  const Prediction original = predict(classifier, image);
  const int target = resolve_classes(config.classes, original).front();
  const PatchGrid grid =
      build_patch_grid(image.height(), image.width(), config.patch_size,
                       config.effective_stride());
  std::vector<double> values(grid.size());
  for_each_patch(grid, config.workers, [&](std::size_t i) {
    const Prediction marginal =
        marginal_prediction(classifier, sampler, image, grid.origins[i],
                            samples, patch_seed(config.seed, i));
    values[i] = score(original[target], marginal[target]);
  });
  AttributionMap map;
  map.kind = kind;
  map.class_index = target;
  map.values = accumulate_patch_values<double>(grid, values, image.height(),
                                               image.width());
  map.meta = make_meta(config, classifier, sampler.id(), samples);
  return map;
}

}  // namespace

void validate(const EngineConfig& config) {
  if (config.patch_size < 1) {
    fail(ErrorCode::kInvalidArgument, "K must be >= 1");
  }
  if (config.samples < 1) fail(ErrorCode::kInvalidArgument, "N must be >= 1");
  if (config.stride < 0 || config.stride > config.patch_size) {
    fail(ErrorCode::kInvalidArgument, "stride must lie in [1, K]");
  }
  if (!(config.eps > 0.0)) fail(ErrorCode::kInvalidArgument, "eps must be > 0");
  if (config.workers < 1) {
    fail(ErrorCode::kInvalidArgument, "workers must be >= 1");
  }
  if (config.classes.indices.empty() && config.classes.top_k < 1) {
    fail(ErrorCode::kInvalidArgument, "class selection is empty");
  }
}

std::vector<int> resolve_classes(const ClassSelection& selection,
                                 const Prediction& original) {
  if (selection.indices.empty()) {
    if (selection.top_k < 1) {
      fail(ErrorCode::kInvalidArgument, "class selection is empty");
    }
    return original.top_k(selection.top_k);
  }
  std::vector<int> out;
  std::set<int> seen;
  for (int c : selection.indices) {
    if (c < 0 || c >= original.num_classes()) {
      fail(ErrorCode::kInvalidArgument,
           fmt::format("class {} is outside [0, {})", c,
                       original.num_classes()));
    }
    if (seen.insert(c).second) out.push_back(c);
  }
  return out;
}

std::uint64_t patch_seed(std::uint64_t seed, std::size_t index) {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(index)));
}

Prediction marginal_prediction(const Classifier& classifier,
                               const Sampler& sampler, const Image& image,
                               Origin origin, int samples, std::uint64_t seed) {
  const int k = sampler.patch_size();
  const ContextWindow context = extract_context(image, origin, k);
  const auto patches = sample(sampler, context, samples, seed);
  std::vector<Image> batch(patches.size(), image);
  for (std::size_t i = 0; i < patches.size(); ++i) {
    write_patch(batch[i], origin, k, patches[i]);
  }
  const auto preds = predict_batch(classifier, batch);
  // Running mean: identical predictions average to themselves bit-exactly.
  Eigen::VectorXd mean = preds.front().probs();
  for (std::size_t i = 1; i < preds.size(); ++i) {
    mean += (preds[i].probs() - mean) / static_cast<double>(i + 1);
  }
  return Prediction(std::move(mean));
}

Prediction exact_marginal_prediction(const Classifier& classifier,
                                     const Sampler& sampler, const Image& image,
                                     Origin origin) {
  const int k = sampler.patch_size();
  const ContextWindow context = extract_context(image, origin, k);
  const auto outcomes = support(sampler, context);
  if (!outcomes) {
    fail(ErrorCode::kUnsupportedOracle,
         "sampler " + sampler.id() + " is not enumerable");
  }
  std::vector<Image> batch(outcomes->size(), image);
  for (std::size_t i = 0; i < outcomes->size(); ++i) {
    write_patch(batch[i], origin, k, (*outcomes)[i].patch);
  }
  const auto preds = predict_batch(classifier, batch);
  Eigen::VectorXd total = Eigen::VectorXd::Zero(classifier.num_classes());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    total += (*outcomes)[i].probability * preds[i].probs();
  }
  return Prediction(std::move(total));
}

ExplanationResult explain(const Classifier& classifier, const Sampler& sampler,
                          const Image& image, const EngineConfig& config) {
  check_inputs(classifier, image, config);
  if (sampler.patch_size() != config.patch_size) {
    fail(ErrorCode::kInvalidArgument,
         fmt::format("sampler K={} does not match configured K={}",
                     sampler.patch_size(), config.patch_size));
  }
  const Prediction original = predict(classifier, image);
  const std::vector<int> classes = resolve_classes(config.classes, original);
  const PatchGrid grid =
      build_patch_grid(image.height(), image.width(), config.patch_size,
                       config.effective_stride());

  std::vector<std::optional<PatchRecord>> records(grid.size());
  for_each_patch(grid, config.workers, [&](std::size_t i) {
    Prediction marginal =
        marginal_prediction(classifier, sampler, image, grid.origins[i],
                            config.samples, patch_seed(config.seed, i));
    PatchRecord rec{grid.origins[i], marginal, {}, 0.0};
    rec.pmi.reserve(classes.size());
    for (int c : classes) {
      rec.pmi.push_back(pmi(original[c], marginal[c], config.eps));
    }
    rec.ig = ig(original, marginal, config.eps);
    records[i] = std::move(rec);
  });

  const MapMeta meta =
      make_meta(config, classifier, sampler.id(), config.samples);
  std::vector<PatchRecord> patches;
  patches.reserve(records.size());
  for (auto& r : records) patches.push_back(std::move(*r));

  std::vector<AttributionMap> pmi_maps;
  std::vector<double> values(patches.size());
  for (std::size_t j = 0; j < classes.size(); ++j) {
    for (std::size_t i = 0; i < patches.size(); ++i) {
      values[i] = patches[i].pmi[j];
    }
    AttributionMap map;
    map.kind = MapKind::kPmi;
    map.class_index = classes[j];
    map.values = accumulate_patch_values<double>(grid, values, image.height(),
                                                 image.width());
    map.meta = meta;
    pmi_maps.push_back(std::move(map));
  }
  for (std::size_t i = 0; i < patches.size(); ++i) values[i] = patches[i].ig;
  AttributionMap ig_map;
  ig_map.kind = MapKind::kIg;
  ig_map.values = accumulate_patch_values<double>(grid, values, image.height(),
                                                  image.width());
  ig_map.meta = meta;

  return {original,          classes, std::move(pmi_maps),
          std::move(ig_map), grid,    std::move(patches)};
}

AttributionMap occlusion_map(const Classifier& classifier, const Image& image,
                             std::uint8_t fill, const EngineConfig& config) {
  const ReferenceSampler reference(config.patch_size, image.channels(), fill);
  return class_map(classifier, reference, image, config, MapKind::kOcclusion, 1,
                   [](double full, double marg) { return full - marg; });
}

AttributionMap pda_map(const Classifier& classifier, const Sampler& sampler,
                       const Image& image, const EngineConfig& config) {
  const double eps = config.eps;
  return class_map(classifier, sampler, image, config, MapKind::kPda,
                   config.samples, [eps](double full, double marg) {
                     return weight_of_evidence(full, marg, eps);
                   });
}

}  // namespace infoattr
