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

#include "infoattr/classifier.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "fixtures.hpp"
#include "infoattr/errors.hpp"
#include "infoattr/evaluation.hpp"
#include "infoattr/file_io.hpp"
#include "test_util.hpp"

namespace infoattr {
namespace {

using testing::random_image;

LinearSoftmaxModel random_linear(ImageShape shape, int classes,
                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 0.05);
  Eigen::MatrixXd w(classes, static_cast<Eigen::Index>(shape.num_bytes()));
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = n(rng);
  Eigen::VectorXd b(classes);
  for (auto& v : b) v = n(rng);
  return LinearSoftmaxModel(shape, w, b);
}

TEST(PredictionTest, ValidatesInput) {
  EXPECT_THROW(Prediction(Eigen::VectorXd::Constant(1, 1.0)), Error);
  EXPECT_THROW(Prediction(Eigen::Vector2d(0.7, 0.7)), Error);
  EXPECT_THROW(Prediction(Eigen::Vector2d(1.5, -0.5)), Error);
  EXPECT_NO_THROW(Prediction(Eigen::Vector2d(0.3, 0.7)));
}

TEST(PredictionTest, TopKBreaksTiesByIndex) {
  const Prediction p(Eigen::Vector4d(0.3, 0.1, 0.3, 0.3));
  EXPECT_EQ(p.top_class(), 0);
  EXPECT_EQ(p.top_k(3), (std::vector<int>{0, 2, 3}));
}

TEST(LinearModelTest, ZeroWeightsGiveUniform) {
  const ImageShape shape{4, 4, 3};
  const LinearSoftmaxModel m(shape, Eigen::MatrixXd::Zero(2, 48),
                             Eigen::VectorXd::Zero(2));
  const Prediction p = predict(m, random_image(4, 4, 3, 1));
  EXPECT_EQ(p[0], 0.5);
  EXPECT_EQ(p[1], 0.5);
}

TEST(LinearModelTest, BatchEqualsSingleBitExactly) {
  const ImageShape shape{6, 5, 3};
  const auto m = random_linear(shape, 7, 2);
  std::vector<Image> batch;
  for (int i = 0; i < 5; ++i) batch.push_back(random_image(6, 5, 3, 10 + i));
  const auto preds = predict_batch(m, batch);
  ASSERT_EQ(preds.size(), 5u);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(preds[i], predict(m, batch[i]));
  EXPECT_EQ(preds[0],
            predict_batch(m, std::vector<Image>{batch[0], batch[0]})[1]);
}

TEST(LinearModelTest, OutputsAreValidDistributions) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto m = random_linear({3, 3, 1}, 2 + s % 9, s);
    const Prediction p = predict(m, random_image(3, 3, 1, s + 100));
    EXPECT_NEAR(p.probs().sum(), 1.0, 1e-6);
    EXPECT_GE(p.probs().minCoeff(), 0.0);
  }
}

TEST(LinearModelTest, ShapeMismatchIsInvalidInput) {
  const auto m = random_linear({4, 4, 1}, 2, 3);
  try {
    predict(m, random_image(4, 5, 1, 0));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidInput);
  }
}

TEST(LinearModelTest, FileRoundTrip) {
  const auto dir = testing::scratch_dir();
  const auto m = random_linear({4, 3, 3}, 3, 4);
  save_linear_model(m, dir / "m.json");
  const auto text = read_file(dir / "m.json");
  EXPECT_NE(text.find("infoattr-linear-v1"), std::string::npos);
  EXPECT_NE(text.find("unit_scale"), std::string::npos);
  const auto back = load_linear_model(dir / "m.json");
  EXPECT_EQ(back.weights(), m.weights());
  EXPECT_EQ(back.bias(), m.bias());
  const Image img = random_image(4, 3, 3, 9);
  EXPECT_EQ(predict(back, img), predict(m, img));
}

TEST(LinearModelTest, RejectsWrongFormatTag) {
  const auto dir = testing::scratch_dir();
  write_file_atomic(dir / "bad.json",
                    R"({"format":"infoattr-linear-v0","input_shape":[1,1,1],)"
                    R"("num_classes":2,"W":[[0],[0]],"b":[0,0]})");
  try {
    load_linear_model(dir / "bad.json");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFormat);
  }
}

TEST(QuadrantTest, FullRegionIntensityGivesSigmoid) {
  const double t = 3.0;
  const QuadrantClassifier q({8, 8, 1}, {0, 0, 4, 4}, t);
  Image img(8, 8, 1, std::uint8_t{0});
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) img.at(r, c) = 255;
  }
  EXPECT_NEAR(predict(q, img)[1], 1.0 / (1.0 + std::exp(-t)), 1e-12);
}

TEST(QuadrantTest, InhibitRegionLowersLogit) {
  const QuadrantClassifier q({8, 8, 3}, {0, 0, 4, 4}, 5.0, Rect{4, 4, 4, 4});
  const Image img(8, 8, 3, std::uint8_t{255});
  EXPECT_NEAR(q.class1_logit(img), 0.0, 1e-12);
  EXPECT_NEAR(predict(q, img)[1], 0.5, 1e-12);
}

TEST(QuadrantTest, IgnoresPixelsOutsideRegions) {
  const QuadrantClassifier q({8, 8, 1}, {0, 0, 4, 4}, 2.0);
  Image a = random_image(8, 8, 1, 5);
  Image b = a;
  b.at(7, 7) = static_cast<std::uint8_t>(255 - b.at(7, 7));
  EXPECT_EQ(predict(q, a), predict(q, b));
}

TEST(QuadrantTest, BatchOfDuplicatesIsIdentical) {
  const QuadrantClassifier q({8, 8, 1}, {2, 2, 4, 4}, 4.0, std::nullopt, -1.0);
  const Image img = random_image(8, 8, 1, 6);
  const auto preds = predict_batch(q, std::vector<Image>{img, img});
  EXPECT_EQ(preds[0], preds[1]);
}

TEST(QuadrantTest, BuiltinFileRoundTrip) {
  const auto dir = testing::scratch_dir();
  const QuadrantClassifier q({8, 8, 1}, {0, 0, 4, 4}, 4.0, Rect{4, 4, 2, 2},
                             -0.5);
  save_quadrant_model(q, dir / "q.json");
  const auto back = load_builtin_classifier(dir / "q.json");
  const Image img = random_image(8, 8, 1, 7);
  EXPECT_EQ(predict(*back, img), predict(q, img));
}

TEST(TrainTest, SeparableBlobsReachHighAccuracy) {
  const auto data = fixtures::two_blob_dataset(100, 16, 1);
  TrainOptions opt;
  opt.seed = 3;
  const auto m = train_logistic(data.images, data.labels, opt);
  EXPECT_GE(accuracy(m, data.images, data.labels), 0.95);
}

TEST(TrainTest, ShuffledLabelsAreNearChanceOnHeldOut) {
  auto data = fixtures::two_blob_dataset(100, 16, 2);
  std::mt19937_64 rng(4);
  std::shuffle(data.labels.begin(), data.labels.end(), rng);
  TrainOptions opt;
  opt.seed = 5;
  const auto m = train_logistic(data.images, data.labels, opt);
  auto held = fixtures::two_blob_dataset(400, 16, 9);
  std::shuffle(held.labels.begin(), held.labels.end(), rng);
  EXPECT_NEAR(accuracy(m, held.images, held.labels), 0.5, 0.1);
}

TEST(TrainTest, LossIsNonIncreasingAcrossEpochs) {
  const auto data = fixtures::two_blob_dataset(40, 8, 3);
  double previous = std::numeric_limits<double>::infinity();
  for (int epochs : {0, 1, 2, 5, 10, 20}) {
    TrainOptions opt;
    opt.epochs = epochs;
    opt.seed = 1;
    const double loss =
        cross_entropy(train_logistic(data.images, data.labels, opt),
                      data.images, data.labels);
    EXPECT_LE(loss, previous + 1e-12);
    previous = loss;
  }
}

TEST(TrainTest, ZeroEpochsReturnsInitialization) {
  const auto data = fixtures::two_blob_dataset(10, 8, 4);
  TrainOptions opt;
  opt.epochs = 0;
  opt.seed = 11;
  const auto a = train_logistic(data.images, data.labels, opt);
  const auto b = train_logistic(data.images, data.labels, opt);
  EXPECT_EQ(a.weights(), b.weights());
  EXPECT_TRUE(a.bias().isZero(0.0));
  EXPECT_LT(a.weights().cwiseAbs().maxCoeff(), 0.1);
}

TEST(TrainTest, DeterministicGivenSeed) {
  const auto data = fixtures::two_blob_dataset(20, 8, 5);
  TrainOptions opt;
  opt.epochs = 15;
  opt.seed = 2;
  EXPECT_EQ(train_logistic(data.images, data.labels, opt).weights(),
            train_logistic(data.images, data.labels, opt).weights());
}

TEST(TrainTest, SingleClassIsDegenerate) {
  const auto data = fixtures::two_blob_dataset(6, 8, 6);
  const std::vector<int> labels(6, 1);
  try {
    train_logistic(data.images, labels, {});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateData);
  }
}

TEST(RandomizeTest, FractionZeroIsIdentity) {
  const auto m = random_linear({4, 4, 1}, 5, 8);
  for (std::uint64_t s : {0u, 1u, 99u}) {
    const auto r = randomize_parameters(m, 0.0, s);
    EXPECT_EQ(r.weights(), m.weights());
    EXPECT_EQ(r.bias(), m.bias());
  }
}

TEST(RandomizeTest, PartialFractionReplacesLeadingRows) {
  const auto m = random_linear({4, 4, 1}, 4, 9);
  const auto r = randomize_parameters(m, 0.3, 1);  // ceil(1.2) = 2 rows
  EXPECT_NE(r.weights().row(0), m.weights().row(0));
  EXPECT_NE(r.weights().row(1), m.weights().row(1));
  EXPECT_EQ(r.weights().row(2), m.weights().row(2));
  EXPECT_EQ(r.weights().row(3), m.weights().row(3));
}

TEST(RandomizeTest, FullRandomizationDecorrelatesWeights) {
  const auto m = random_linear({16, 16, 1}, 4, 10);
  const auto r = randomize_parameters(m, 1.0, 2);
  EXPECT_LT(std::abs(pearson(m.weights(), r.weights())), 0.2);
  const Image img = random_image(16, 16, 1, 3);
  EXPECT_EQ(predict(r, img), predict(r, img));
  EXPECT_EQ(randomize_parameters(m, 1.0, 2).weights(), r.weights());
}

TEST(ConstantClassifierTest, IgnoresInput) {
  const ConstantClassifier k({4, 4, 1},
                             Prediction(Eigen::Vector3d(0.2, 0.3, 0.5)));
  EXPECT_EQ(predict(k, random_image(4, 4, 1, 1)),
            predict(k, random_image(4, 4, 1, 2)));
}

}  // namespace
}  // namespace infoattr
