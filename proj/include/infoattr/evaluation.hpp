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

// Faithfulness and sanity metrics for attribution maps.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <nlohmann/json.hpp>
#include <numeric>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "infoattr/attribution_map.hpp"
#include "infoattr/classifier.hpp"
#include "infoattr/engine.hpp"
#include "infoattr/sampler.hpp"

namespace infoattr {

// --- correlations -----------------------------------------------------------

// Pearson correlation of two equally sized arrays. Throws
// kUndefinedCorrelation when either input is constant.
template <typename DerivedA, typename DerivedB>
double pearson(const Eigen::DenseBase<DerivedA>& a,
               const Eigen::DenseBase<DerivedB>& b) {
  if (a.size() != b.size() || a.size() == 0) {
    fail(ErrorCode::kInvalidArgument, "pearson: inputs differ in size");
  }
  const Eigen::ArrayXd x =
      a.derived().template cast<double>().reshaped().array();
  const Eigen::ArrayXd y =
      b.derived().template cast<double>().reshaped().array();
  const Eigen::ArrayXd xc = x - x.mean();
  const Eigen::ArrayXd yc = y - y.mean();
  const double sxx = (xc * xc).sum();
  const double syy = (yc * yc).sum();
  const double sxy = (xc * yc).sum();
  if (sxx == 0.0 || syy == 0.0) {
    fail(ErrorCode::kUndefinedCorrelation,
         "correlation is undefined for a constant map");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// 1-based ranks with tied values sharing their average rank.
template <typename Derived>
Eigen::ArrayXd average_ranks(const Eigen::DenseBase<Derived>& values) {
  const Eigen::ArrayXd v =
      values.derived().template cast<double>().reshaped().array();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(v.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return v[i] < v[j]; });
  Eigen::ArrayXd ranks(v.size());
  std::size_t start = 0;
  while (start < order.size()) {
    std::size_t end = start + 1;
    while (end < order.size() && v[order[end]] == v[order[start]]) ++end;
    const double rank = 0.5 * static_cast<double>(start + 1 + end);
    for (std::size_t i = start; i < end; ++i) ranks[order[i]] = rank;
    start = end;
  }
  return ranks;
}

template <typename DerivedA, typename DerivedB>
double spearman(const Eigen::DenseBase<DerivedA>& a,
                const Eigen::DenseBase<DerivedB>& b) {
  if (a.size() != b.size() || a.size() == 0) {
    fail(ErrorCode::kInvalidArgument, "spearman: inputs differ in size");
  }
  return pearson(average_ranks(a), average_ranks(b));
}

double pearson(const AttributionMap& a, const AttributionMap& b);
double spearman(const AttributionMap& a, const AttributionMap& b);

// --- perturbation curves ----------------------------------------------------

enum class RemovalOrder { kDescending, kAscending };

struct ConstantFill {
  std::vector<std::uint8_t> per_channel{128};
};

// Removed pixels take their value from an image in-filled patch by patch with
// one draw of `sampler` per patch.
struct SamplerFill {
  const Sampler* sampler = nullptr;
  std::uint64_t seed = 0;
};

using Fill = std::variant<ConstantFill, SamplerFill>;

struct CurveOptions {
  RemovalOrder order = RemovalOrder::kDescending;
  Fill fill = ConstantFill{};
  int steps = 100;
  // Rank only pixels with a negative attribution; the remaining pixels are
  // never removed.
  bool only_negative = false;
};

struct PerturbationCurve {
  std::vector<double> fractions;
  std::vector<double> probabilities;
  RemovalOrder order = RemovalOrder::kDescending;
  int class_index = 0;
  std::size_t candidate_pixels = 0;
};

// Pixels are ranked by attribution (ties by row-major index). At step t the
// first ceil(t * M / steps) of the M candidates are replaced by the fill and
// the class probability is recorded; step 0 is the untouched image.
PerturbationCurve perturbation_curve(const Classifier& classifier,
                                     const Image& image,
                                     const AttributionMap& map, int class_index,
                                     const CurveOptions& options);

// Trapezoidal area under the curve over the fraction axis.
double auc(const PerturbationCurve& curve);

// Image with every patch of a stride-K grid replaced by one sampler draw.
Image infill_image(const Image& image, const Sampler& sampler,
                   std::uint64_t seed);

// Rounded per-channel mean over a set of images.
std::vector<std::uint8_t> dataset_mean_fill(std::span<const Image> images);

// "fraction,probability" header plus one row per step.
std::string curve_csv(const PerturbationCurve& curve);

// --- sanity checks ----------------------------------------------------------

struct MapCorrelation {
  double pmi_pearson = 0.0;
  double pmi_spearman = 0.0;
  double ig_pearson = 0.0;
  double ig_spearman = 0.0;
};

struct CorrelationSummary {
  std::vector<MapCorrelation> per_image;
  MapCorrelation mean;
  MapCorrelation mean_abs;
};

// Explains every image with both classifiers and correlates the maps. The
// PMI class is the one `config` resolves against `reference`'s prediction;
// `candidate` is explained for that same class.
CorrelationSummary compare_explanations(const Classifier& reference,
                                        const Classifier& candidate,
                                        const Sampler& sampler,
                                        std::span<const Image> images,
                                        const EngineConfig& config);

struct SanityRow {
  double fraction = 0.0;
  CorrelationSummary correlations;
};

struct SanityReport {
  EngineConfig config;
  std::vector<SanityRow> rows;  // in input fraction order
};

using ClassifierFactory =
    std::function<std::shared_ptr<const Classifier>(double fraction)>;

// For each fraction: build the randomized classifier, explain every image and
// correlate PMI and IG maps with those of the fraction-0 classifier.
// `fractions` must contain 0 and 1.
SanityReport sanity_param_randomization(const ClassifierFactory& factory,
                                        const Sampler& sampler,
                                        std::span<const Image> images,
                                        std::span<const double> fractions,
                                        const EngineConfig& config);

nlohmann::json to_json(const EngineConfig& config);
nlohmann::json to_json(const MapCorrelation& c);
nlohmann::json to_json(const SanityReport& report);
std::string sanity_csv(const SanityReport& report);

}  // namespace infoattr
