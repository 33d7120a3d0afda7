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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "fixtures.hpp"
#include "infoattr/errors.hpp"
#include "test_util.hpp"

namespace infoattr {
namespace {

using testing::random_image;

AttributionMap map_from(const MapValues<double>& v, int cls = 1) {
  AttributionMap m;
  m.kind = MapKind::kPmi;
  m.class_index = cls;
  m.values = v;
  return m;
}

MapValues<double> random_values(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0, 1);
  MapValues<double> v(h, w);
  for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = n(rng);
  return v;
}

PerturbationCurve curve_of(std::vector<double> f, std::vector<double> p) {
  PerturbationCurve c;
  c.fractions = std::move(f);
  c.probabilities = std::move(p);
  return c;
}

TEST(CorrelationTest, SelfAndNegation) {
  const auto v = random_values(8, 8, 1);
  EXPECT_EQ(pearson(map_from(v), map_from(v)), 1.0);
  EXPECT_EQ(pearson(map_from(v), map_from(-v)), -1.0);
  EXPECT_EQ(spearman(map_from(v), map_from(v)), 1.0);
}

TEST(CorrelationTest, SpearmanIgnoresMonotoneTransforms) {
  const MapValues<double> v = random_values(6, 7, 2).array().abs() + 0.1;
  const MapValues<double> sq = v.array().square();
  EXPECT_NEAR(spearman(map_from(v), map_from(sq)), 1.0, 1e-15);
  EXPECT_LT(pearson(map_from(v), map_from(sq)), 1.0);
}

TEST(CorrelationTest, AverageRanksForTies) {
  const Eigen::Vector4d v(3.0, 1.0, 3.0, 2.0);
  const Eigen::ArrayXd r = average_ranks(v);
  EXPECT_EQ(r[0], 3.5);
  EXPECT_EQ(r[1], 1.0);
  EXPECT_EQ(r[2], 3.5);
  EXPECT_EQ(r[3], 2.0);
}

TEST(CorrelationTest, ConstantMapIsUndefined) {
  const MapValues<double> flat = MapValues<double>::Constant(4, 4, 2.0);
  try {
    pearson(map_from(flat), map_from(random_values(4, 4, 3)));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUndefinedCorrelation);
  }
  EXPECT_THROW(spearman(map_from(random_values(4, 4, 3)), map_from(flat)),
               Error);
}

TEST(CorrelationTest, DimensionMismatchIsInvalid) {
  EXPECT_THROW(pearson(map_from(random_values(4, 4, 1)),
                       map_from(random_values(2, 8, 1))),
               Error);
}

TEST(CorrelationTest, ShuffledCopiesAreUncorrelated) {
  std::mt19937_64 rng(4);
  double sum_p = 0, sum_s = 0;
  for (int t = 0; t < 100; ++t) {
    const auto v = random_values(32, 32, 100 + t);
    MapValues<double> s = v;
    std::shuffle(s.data(), s.data() + s.size(), rng);
    sum_p += std::abs(pearson(map_from(v), map_from(s)));
    sum_s += std::abs(spearman(map_from(v), map_from(s)));
  }
  EXPECT_LT(sum_p / 100, 0.1);
  EXPECT_LT(sum_s / 100, 0.1);
}

TEST(AucTest, Examples) {
  EXPECT_DOUBLE_EQ(auc(curve_of({0, 0.5, 1}, {0.5, 0.5, 0.5})), 0.5);
  EXPECT_DOUBLE_EQ(auc(curve_of({0, 1}, {1, 0})), 0.5);
  EXPECT_DOUBLE_EQ(auc(curve_of({0, 0.5, 1}, {1, 0, 0})), 0.25);
}

TEST(AucTest, BoundedForRandomCurves) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 1000; ++t) {
    const int steps = 1 + t % 50;
    PerturbationCurve c;
    for (int i = 0; i <= steps; ++i) {
      c.fractions.push_back(static_cast<double>(i) / steps);
      c.probabilities.push_back(u(rng));
    }
    const double a = auc(c);
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 1.0);
  }
}

TEST(CurveTest, ConstantClassifierIsFlat) {
  const Image img = random_image(8, 8, 3, 1);
  const ConstantClassifier k(img.shape(),
                             Prediction(Eigen::Vector2d(0.3, 0.7)));
  const auto c =
      perturbation_curve(k, img, map_from(random_values(8, 8, 2)), 1, {});
  ASSERT_EQ(c.fractions.size(), 101u);
  EXPECT_EQ(c.fractions.front(), 0.0);
  EXPECT_EQ(c.fractions.back(), 1.0);
  for (double p : c.probabilities) EXPECT_EQ(p, 0.7);
  EXPECT_NEAR(auc(c), 0.7, 1e-12);
}

TEST(CurveTest, SingleStepHasTwoPoints) {
  const Image img(8, 8, 1, std::uint8_t{255});
  const QuadrantClassifier q(img.shape(), {0, 0, 4, 4}, 4.0);
  CurveOptions opt;
  opt.steps = 1;
  opt.fill = ConstantFill{{0}};
  const auto c =
      perturbation_curve(q, img, map_from(random_values(8, 8, 3)), 1, opt);
  ASSERT_EQ(c.fractions, (std::vector<double>{0.0, 1.0}));
  EXPECT_EQ(c.probabilities[0], predict(q, img)[1]);
  EXPECT_EQ(c.probabilities[1], predict(q, Image(8, 8, 1))[1]);
  EXPECT_EQ(curve_csv(c).substr(0, 21), "fraction,probability\n");
}

TEST(CurveTest, GroundTruthMapReachesFloorAtRegionFraction) {
  const Image img(16, 16, 1, std::uint8_t{255});
  const Rect region{0, 0, 8, 8};
  const QuadrantClassifier q(img.shape(), region, 6.0);
  MapValues<double> truth = MapValues<double>::Zero(16, 16);
  truth.block(0, 0, 8, 8).setOnes();
  CurveOptions opt;
  opt.steps = 16;
  opt.fill = ConstantFill{{0}};
  const auto c = perturbation_curve(q, img, map_from(truth), 1, opt);
  const double floor = predict(q, Image(16, 16, 1))[1];
  // |R| / (H·W) = 1/4 is reached at step 4.
  EXPECT_GT(c.probabilities[3], floor);
  for (int t = 4; t <= 16; ++t) EXPECT_EQ(c.probabilities[t], floor);
  // Brute-force re-evaluation of an intermediate step.
  Image partial = img;
  for (int i = 0; i < 32; ++i) partial.at(i / 8, i % 8) = 0;
  EXPECT_EQ(c.probabilities[2], predict(q, partial)[1]);
}

TEST(CurveTest, TiesFollowRowMajorOrder) {
  const Image img(2, 2, 1, std::uint8_t{255});
  const QuadrantClassifier q(img.shape(), {0, 0, 1, 1}, 5.0);
  CurveOptions opt;
  opt.steps = 4;
  opt.fill = ConstantFill{{0}};
  const auto c = perturbation_curve(
      q, img, map_from(MapValues<double>::Zero(2, 2)), 1, opt);
  // Pixel (0,0) is first in row-major order, so the first step removes it.
  EXPECT_EQ(c.probabilities[1], c.probabilities[4]);
  EXPECT_LT(c.probabilities[1], c.probabilities[0]);
}

TEST(CurveTest, OnlyNegativeRestrictsCandidates) {
  const Image img = random_image(4, 4, 1, 7);
  const ConstantClassifier k(img.shape(),
                             Prediction(Eigen::Vector2d(0.5, 0.5)));
  MapValues<double> v = MapValues<double>::Ones(4, 4);
  v(1, 1) = -2.0;
  v(3, 0) = -1.0;
  CurveOptions opt;
  opt.order = RemovalOrder::kAscending;
  opt.only_negative = true;
  EXPECT_EQ(perturbation_curve(k, img, map_from(v), 0, opt).candidate_pixels,
            2u);
}

TEST(CurveTest, ValidatesArguments) {
  const Image img = random_image(4, 4, 1, 7);
  const ConstantClassifier k(img.shape(),
                             Prediction(Eigen::Vector2d(0.5, 0.5)));
  CurveOptions opt;
  EXPECT_THROW(
      perturbation_curve(k, img, map_from(random_values(4, 5, 1)), 0, opt),
      Error);
  opt.steps = 0;
  EXPECT_THROW(
      perturbation_curve(k, img, map_from(random_values(4, 4, 1)), 0, opt),
      Error);
  opt.steps = 10;
  EXPECT_THROW(
      perturbation_curve(k, img, map_from(random_values(4, 4, 1)), 2, opt),
      Error);
}

TEST(CurveTest, SamplerInfillReplacesWholeGrid) {
  const Image img = random_image(8, 8, 1, 8);
  const ReferenceSampler ref(4, 1, 33);
  const Image filled = infill_image(img, ref, 0);
  for (auto v : filled.bytes()) EXPECT_EQ(v, 33);
  const QuadrantClassifier q(img.shape(), {0, 0, 4, 4}, 4.0);
  CurveOptions opt;
  opt.steps = 2;
  opt.fill = SamplerFill{&ref, 0};
  const auto c =
      perturbation_curve(q, img, map_from(random_values(8, 8, 1)), 1, opt);
  EXPECT_EQ(c.probabilities.back(),
            predict(q, Image(8, 8, 1, std::uint8_t{33}))[1]);
}

TEST(CurveTest, DatasetMeanFill) {
  const std::vector<Image> imgs{Image(2, 2, 3, std::uint8_t{10}),
                                Image(2, 2, 3, std::uint8_t{21})};
  EXPECT_EQ(dataset_mean_fill(imgs), (std::vector<std::uint8_t>{16, 16, 16}));
}

class SanityTest : public ::testing::Test {
 protected:
  void SetUp() override {
    data_ = fixtures::two_blob_dataset(60, 16, 1);
    TrainOptions opt;
    opt.seed = 1;
    model_ = std::make_shared<LinearSoftmaxModel>(
        train_logistic(data_.images, data_.labels, opt));
    images_.assign(data_.images.begin(), data_.images.begin() + 3);
    config_.patch_size = 4;
    config_.samples = 2;
  }
  fixtures::LabeledSet data_;
  std::shared_ptr<LinearSoftmaxModel> model_;
  std::vector<Image> images_;
  EngineConfig config_;
};

TEST_F(SanityTest, FractionZeroIsExactlyOneAndRowsKeepOrder) {
  const ReferenceSampler ref(4, 1, 45);
  const ClassifierFactory factory =
      [&](double f) -> std::shared_ptr<const Classifier> {
    return std::make_shared<LinearSoftmaxModel>(
        randomize_parameters(*model_, f, 3));
  };
  const std::vector<double> fractions{1.0, 0.0, 0.5};
  const auto report =
      sanity_param_randomization(factory, ref, images_, fractions, config_);
  ASSERT_EQ(report.rows.size(), 3u);
  EXPECT_EQ(report.rows[0].fraction, 1.0);
  EXPECT_EQ(report.rows[2].fraction, 0.5);
  const auto& zero = report.rows[1].correlations.mean;
  EXPECT_EQ(zero.pmi_pearson, 1.0);
  EXPECT_EQ(zero.pmi_spearman, 1.0);
  EXPECT_EQ(zero.ig_pearson, 1.0);
  EXPECT_EQ(zero.ig_spearman, 1.0);
  const auto j = to_json(report);
  EXPECT_EQ(j["rows"].size(), 3u);
  EXPECT_EQ(j["config"]["K"], 4);
  const std::string csv = sanity_csv(report);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

TEST_F(SanityTest, RequiresEndpointFractions) {
  const ReferenceSampler ref(4, 1, 45);
  const ClassifierFactory factory =
      [&](double) -> std::shared_ptr<const Classifier> { return model_; };
  const std::vector<double> fractions{0.0, 0.5};
  EXPECT_THROW(
      sanity_param_randomization(factory, ref, images_, fractions, config_),
      Error);
}

}  // namespace
}  // namespace infoattr
