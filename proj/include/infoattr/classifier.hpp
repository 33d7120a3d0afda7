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

// Black-box classifier contract plus the in-process models used for
// experiments and tests.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "infoattr/image.hpp"
#include "infoattr/prediction.hpp"

namespace infoattr {

class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual int num_classes() const = 0;
  virtual ImageShape input_shape() const = 0;
  virtual std::string id() const = 0;

  // Shapes are validated by predict_batch before this is called.
  // Implementations must be safe to call concurrently.
  virtual std::vector<Prediction> predict_images(
      std::span<const Image> images) const = 0;
};

// Order-preserving batch prediction. Throws kInvalidInput when an image does
// not match the classifier input shape.
std::vector<Prediction> predict_batch(const Classifier& classifier,
                                      std::span<const Image> images);
Prediction predict(const Classifier& classifier, const Image& image);

// softmax(W * x / 255 + b) over the flattened row-major, channel-last bytes.
class LinearSoftmaxModel final : public Classifier {
 public:
  LinearSoftmaxModel(ImageShape input_shape, Eigen::MatrixXd weights,
                     Eigen::VectorXd bias);

  int num_classes() const override { return static_cast<int>(bias_.size()); }
  ImageShape input_shape() const override { return shape_; }
  std::string id() const override;
  std::vector<Prediction> predict_images(
      std::span<const Image> images) const override;

  const Eigen::MatrixXd& weights() const { return weights_; }
  const Eigen::VectorXd& bias() const { return bias_; }

  Eigen::VectorXd logits(const Image& image) const;

 private:
  ImageShape shape_;
  Eigen::MatrixXd weights_;
  Eigen::VectorXd bias_;
};

// Bytes scaled into [0, 1] the way LinearSoftmaxModel sees them.
Eigen::VectorXd normalized_features(const Image& image);

void save_linear_model(const LinearSoftmaxModel& model,
                       const std::filesystem::path& path);
LinearSoftmaxModel load_linear_model(const std::filesystem::path& path);

struct Rect {
  int row = 0;
  int col = 0;
  int height = 0;
  int width = 0;

  bool contains(int r, int c) const {
    return r >= row && r < row + height && c >= col && c < col + width;
  }
  friend bool operator==(const Rect&, const Rect&) = default;
};

// Two-class model with a known salient region:
//   logit_1 = temperature * (mean(region) - mean(inhibit)) + offset
//   logit_0 = 0
// with means taken over all channels and scaled into [0, 1].
class QuadrantClassifier final : public Classifier {
 public:
  QuadrantClassifier(ImageShape input_shape, Rect region, double temperature,
                     std::optional<Rect> inhibit = std::nullopt,
                     double offset = 0.0);

  int num_classes() const override { return 2; }
  ImageShape input_shape() const override { return shape_; }
  std::string id() const override;
  std::vector<Prediction> predict_images(
      std::span<const Image> images) const override;

  const Rect& region() const { return region_; }
  const std::optional<Rect>& inhibit_region() const { return inhibit_; }
  double temperature() const { return temperature_; }
  double offset() const { return offset_; }

  double class1_logit(const Image& image) const;

 private:
  ImageShape shape_;
  Rect region_;
  double temperature_;
  std::optional<Rect> inhibit_;
  double offset_;
};

// Ignores its input.
class ConstantClassifier final : public Classifier {
 public:
  ConstantClassifier(ImageShape input_shape, Prediction output);

  int num_classes() const override { return output_.num_classes(); }
  ImageShape input_shape() const override { return shape_; }
  std::string id() const override { return "constant"; }
  std::vector<Prediction> predict_images(
      std::span<const Image> images) const override;

 private:
  ImageShape shape_;
  Prediction output_;
};

void save_quadrant_model(const QuadrantClassifier& model,
                         const std::filesystem::path& path);

// Loads either an infoattr-linear-v1 or infoattr-quadrant-v1 record.
std::unique_ptr<Classifier> load_builtin_classifier(
    const std::filesystem::path& path);

struct TrainOptions {
  int epochs = 200;
  double learning_rate = 0.5;
  std::uint64_t seed = 0;
  double init_stddev = 0.01;
  // 0 infers max(label) + 1.
  int num_classes = 0;
};

// Full-batch gradient descent on softmax cross-entropy. A step that would
// raise the training loss is retried with a halved rate, so the per-epoch loss
// never increases. Throws kDegenerateData when fewer than two classes occur.
LinearSoftmaxModel train_logistic(std::span<const Image> images,
                                  std::span<const int> labels,
                                  const TrainOptions& options);

double cross_entropy(const LinearSoftmaxModel& model,
                     std::span<const Image> images,
                     std::span<const int> labels);

double accuracy(const Classifier& model, std::span<const Image> images,
                std::span<const int> labels);

// Replaces the first ceil(fraction * L) rows of W (and the matching bias
// entries) by N(0, sd) draws, sd being the standard deviation of the original
// row. fraction = 0 returns the model unchanged.
LinearSoftmaxModel randomize_parameters(const LinearSoftmaxModel& model,
                                        double fraction, std::uint64_t seed);

}  // namespace infoattr
