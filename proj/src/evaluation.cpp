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

#include "infoattr/evaluation.hpp"

#include <fmt/format.h>

#include "infoattr/errors.hpp"

namespace infoattr {

using json = nlohmann::json;

double pearson(const AttributionMap& a, const AttributionMap& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    fail(ErrorCode::kInvalidArgument, "maps differ in dimensions");
  }
  return pearson(a.values, b.values);
}

double spearman(const AttributionMap& a, const AttributionMap& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    fail(ErrorCode::kInvalidArgument, "maps differ in dimensions");
  }
  return spearman(a.values, b.values);
}

Image infill_image(const Image& image, const Sampler& sampler,
                   std::uint64_t seed) {
  const int k = sampler.patch_size();
  const PatchGrid grid = build_patch_grid(image.height(), image.width(), k, k);
  Image out = image;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const ContextWindow ctx = extract_context(image, grid.origins[i], k);
    write_patch(out, grid.origins[i], k,
                sample(sampler, ctx, 1, patch_seed(seed, i)).front());
  }
  return out;
}

std::vector<std::uint8_t> dataset_mean_fill(std::span<const Image> images) {
  if (images.empty()) {
    fail(ErrorCode::kInvalidArgument, "dataset mean needs at least one image");
  }
  const int channels = images.front().channels();
  std::vector<double> sum(channels, 0.0);
  double count = 0.0;
  for (const Image& image : images) {
    if (image.channels() != channels) {
      fail(ErrorCode::kInvalidArgument, "images differ in channel count");
    }
    const auto b = image.bytes();
    for (std::size_t i = 0; i < b.size(); ++i) sum[i % channels] += b[i];
    count += static_cast<double>(b.size() / channels);
  }
  std::vector<std::uint8_t> out(channels);
  for (int c = 0; c < channels; ++c) {
    out[c] = static_cast<std::uint8_t>(std::lround(sum[c] / count));
  }
  return out;
}

PerturbationCurve perturbation_curve(const Classifier& classifier,
                                     const Image& image,
                                     const AttributionMap& map, int class_index,
                                     const CurveOptions& options) {
  if (map.height() != image.height() || map.width() != image.width()) {
    fail(ErrorCode::kInvalidArgument,
         "attribution map and image differ in dimensions");
  }
  if (options.steps < 1)
    fail(ErrorCode::kInvalidArgument, "steps must be >= 1");
  if (class_index < 0 || class_index >= classifier.num_classes()) {
    fail(ErrorCode::kInvalidArgument, "class index out of range");
  }

  Image fill_source = image;
  if (const auto* constant = std::get_if<ConstantFill>(&options.fill)) {
    const auto& v = constant->per_channel;
    if (v.size() != 1 &&
        v.size() != static_cast<std::size_t>(image.channels())) {
      fail(ErrorCode::kInvalidArgument, "fill must give 1 or C bytes");
    }
    auto bytes = fill_source.bytes();
    for (std::size_t i = 0; i < bytes.size(); ++i) {
      bytes[i] = v.size() == 1 ? v[0] : v[i % v.size()];
    }
  } else {
    const auto& s = std::get<SamplerFill>(options.fill);
    if (!s.sampler) fail(ErrorCode::kInvalidArgument, "sampler fill is null");
    fill_source = infill_image(image, *s.sampler, s.seed);
  }

  const auto values = map.values.reshaped<Eigen::RowMajor>();
  std::vector<Eigen::Index> ranked;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (!options.only_negative || values[i] < 0.0) ranked.push_back(i);
  }
  const bool descending = options.order == RemovalOrder::kDescending;
  std::stable_sort(
      ranked.begin(), ranked.end(), [&](Eigen::Index a, Eigen::Index b) {
        return descending ? values[a] > values[b] : values[a] < values[b];
      });

  const std::size_t m = ranked.size();
  const int channels = image.channels();
  std::vector<Image> batch;
  batch.reserve(options.steps + 1);
  Image current = image;
  std::size_t removed = 0;
  PerturbationCurve curve;
  curve.order = options.order;
  curve.class_index = class_index;
  curve.candidate_pixels = m;
  for (int t = 0; t <= options.steps; ++t) {
    const std::size_t target =
        (static_cast<std::size_t>(t) * m + options.steps - 1) / options.steps;
    for (; removed < target; ++removed) {
      const auto pixel = static_cast<std::size_t>(ranked[removed]);
      for (int c = 0; c < channels; ++c) {
        current.bytes()[pixel * channels + c] =
            fill_source.bytes()[pixel * channels + c];
      }
    }
    batch.push_back(current);
    curve.fractions.push_back(static_cast<double>(t) / options.steps);
  }
  for (const Prediction& p : predict_batch(classifier, batch)) {
    curve.probabilities.push_back(p[class_index]);
  }
  return curve;
}

double auc(const PerturbationCurve& curve) {
  if (curve.fractions.size() != curve.probabilities.size() ||
      curve.fractions.size() < 2) {
    fail(ErrorCode::kInvalidArgument, "curve needs at least two points");
  }
  double area = 0.0;
  for (std::size_t i = 1; i < curve.fractions.size(); ++i) {
    area += 0.5 * (curve.fractions[i] - curve.fractions[i - 1]) *
            (curve.probabilities[i] + curve.probabilities[i - 1]);
  }
  return area;
}

std::string curve_csv(const PerturbationCurve& curve) {
  std::string out = "fraction,probability\n";
  for (std::size_t i = 0; i < curve.fractions.size(); ++i) {
    out += fmt::format("{:.17g},{:.17g}\n", curve.fractions[i],
                       curve.probabilities[i]);
  }
  return out;
}

namespace {

MapCorrelation correlate(const ExplanationResult& a,
                         const ExplanationResult& b) {
  return {pearson(a.pmi_maps.front(), b.pmi_maps.front()),
          spearman(a.pmi_maps.front(), b.pmi_maps.front()),
          pearson(a.ig_map, b.ig_map), spearman(a.ig_map, b.ig_map)};
}

template <typename F>
MapCorrelation average(const std::vector<MapCorrelation>& items, F&& f) {
  MapCorrelation sum;
  for (const auto& c : items) {
    sum.pmi_pearson += f(c.pmi_pearson);
    sum.pmi_spearman += f(c.pmi_spearman);
    sum.ig_pearson += f(c.ig_pearson);
    sum.ig_spearman += f(c.ig_spearman);
  }
  // Sum first, divide once: n coefficients of exactly 1 average to 1.
  const double n = static_cast<double>(items.size());
  return {sum.pmi_pearson / n, sum.pmi_spearman / n, sum.ig_pearson / n,
          sum.ig_spearman / n};
}

CorrelationSummary summarize(std::vector<MapCorrelation> per_image) {
  CorrelationSummary s;
  s.mean = average(per_image, [](double v) { return v; });
  s.mean_abs = average(per_image, [](double v) { return std::abs(v); });
  s.per_image = std::move(per_image);
  return s;
}

EngineConfig pinned_to(const EngineConfig& config, int class_index) {
  EngineConfig out = config;
  out.classes.indices = {class_index};
  return out;
}

}  // namespace

CorrelationSummary compare_explanations(const Classifier& reference,
                                        const Classifier& candidate,
                                        const Sampler& sampler,
                                        std::span<const Image> images,
                                        const EngineConfig& config) {
  if (images.empty()) {
    fail(ErrorCode::kInvalidArgument, "comparison needs at least one image");
  }
  std::vector<MapCorrelation> per_image;
  for (const Image& image : images) {
    const ExplanationResult base = explain(reference, sampler, image, config);
    const EngineConfig pinned = pinned_to(config, base.classes.front());
    const ExplanationResult other = explain(candidate, sampler, image, pinned);
    per_image.push_back(correlate(base, other));
  }
  return summarize(std::move(per_image));
}

SanityReport sanity_param_randomization(const ClassifierFactory& factory,
                                        const Sampler& sampler,
                                        std::span<const Image> images,
                                        std::span<const double> fractions,
                                        const EngineConfig& config) {
  if (images.empty()) {
    fail(ErrorCode::kInvalidArgument, "sanity check needs at least one image");
  }
  const auto has = [&](double f) {
    return std::find(fractions.begin(), fractions.end(), f) != fractions.end();
  };
  if (!has(0.0) || !has(1.0)) {
    fail(ErrorCode::kInvalidArgument, "fractions must include 0 and 1");
  }
  const auto reference = factory(0.0);
  std::vector<ExplanationResult> base;
  base.reserve(images.size());
  for (const Image& image : images) {
    base.push_back(explain(*reference, sampler, image, config));
  }
  SanityReport report{config, {}};
  for (const double fraction : fractions) {
    const auto model = factory(fraction);
    std::vector<MapCorrelation> per_image;
    for (std::size_t i = 0; i < images.size(); ++i) {
      const ExplanationResult other =
          explain(*model, sampler, images[i],
                  pinned_to(config, base[i].classes.front()));
      per_image.push_back(correlate(base[i], other));
    }
    report.rows.push_back({fraction, summarize(std::move(per_image))});
  }
  return report;
}

json to_json(const EngineConfig& config) {
  json classes;
  if (config.classes.indices.empty()) {
    classes = fmt::format("top:{}", config.classes.top_k);
  } else {
    classes = config.classes.indices;
  }
  return {{"K", config.patch_size},
          {"N", config.samples},
          {"stride", config.effective_stride()},
          {"eps", config.eps},
          {"log_base", 2},
          {"classes", classes},
          {"seed", config.seed},
          {"workers", config.workers}};
}

json to_json(const MapCorrelation& c) {
  return {{"pmi_pearson", c.pmi_pearson},
          {"pmi_spearman", c.pmi_spearman},
          {"ig_pearson", c.ig_pearson},
          {"ig_spearman", c.ig_spearman}};
}

json to_json(const SanityReport& report) {
  json rows = json::array();
  for (const auto& row : report.rows) {
    json per_image = json::array();
    for (const auto& c : row.correlations.per_image) {
      per_image.push_back(to_json(c));
    }
    rows.push_back({{"fraction", row.fraction},
                    {"mean", to_json(row.correlations.mean)},
                    {"mean_abs", to_json(row.correlations.mean_abs)},
                    {"per_image", std::move(per_image)}});
  }
  return {{"config", to_json(report.config)}, {"rows", std::move(rows)}};
}

std::string sanity_csv(const SanityReport& report) {
  std::string out =
      "fraction,pmi_pearson,pmi_spearman,ig_pearson,ig_spearman,"
      "abs_pmi_pearson,abs_pmi_spearman,abs_ig_pearson,abs_ig_spearman\n";
  for (const auto& row : report.rows) {
    const auto& m = row.correlations.mean;
    const auto& a = row.correlations.mean_abs;
    out += fmt::format(
        "{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},"
        "{:.17g},{:.17g},{:.17g}\n",
        row.fraction, m.pmi_pearson, m.pmi_spearman, m.ig_pearson,
        m.ig_spearman, a.pmi_pearson, a.pmi_spearman, a.ig_pearson,
        a.ig_spearman);
  }
  return out;
}

}  // namespace infoattr
