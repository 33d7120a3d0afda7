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

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <random>
#include <set>

#include "infoattr/errors.hpp"
#include "infoattr/file_io.hpp"

namespace infoattr {
namespace {

using json = nlohmann::json;

constexpr char kLinearFormat[] = "infoattr-linear-v1";
constexpr char kQuadrantFormat[] = "infoattr-quadrant-v1";

std::string shape_string(const ImageShape& s) {
  return fmt::format("{}x{}x{}", s.height, s.width, s.channels);
}

double region_mean(const Image& image, const Rect& rect) {
  double sum = 0.0;
  for (int r = rect.row; r < rect.row + rect.height; ++r) {
    for (int c = rect.col; c < rect.col + rect.width; ++c) {
      for (int ch = 0; ch < image.channels(); ++ch) sum += image.at(r, c, ch);
    }
  }
  const double count =
      static_cast<double>(rect.height) * rect.width * image.channels();
  return sum / (255.0 * count);
}

void check_rect(const Rect& rect, const ImageShape& shape, const char* what) {
  if (rect.height < 1 || rect.width < 1 || rect.row < 0 || rect.col < 0 ||
      rect.row + rect.height > shape.height ||
      rect.col + rect.width > shape.width) {
    fail(ErrorCode::kInvalidArgument,
         fmt::format("{} rectangle does not fit a {} input", what,
                     shape_string(shape)));
  }
}

json rect_to_json(const Rect& r) {
  return json::array({r.row, r.col, r.height, r.width});
}

Rect rect_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) {
    fail(ErrorCode::kFormat, "rectangle must be [row, col, height, width]");
  }
  return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

ImageShape shape_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) {
    fail(ErrorCode::kFormat, "input_shape must be [H, W, C]");
  }
  return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
}

json parse_json_file(const std::filesystem::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
}

LinearSoftmaxModel linear_from_json(const json& j) {
  const ImageShape shape = shape_from_json(j.at("input_shape"));
  const int classes = j.at("num_classes").get<int>();
  if (j.value("normalize", std::string("unit_scale")) != "unit_scale") {
    fail(ErrorCode::kFormat, "only unit_scale normalization is supported");
  }
  const auto& w = j.at("W");
  const auto& b = j.at("b");
  const auto dim = static_cast<Eigen::Index>(shape.num_bytes());
  if (!w.is_array() || static_cast<int>(w.size()) != classes || !b.is_array() ||
      static_cast<int>(b.size()) != classes) {
    fail(ErrorCode::kFormat, "W/b do not match num_classes");
  }
  Eigen::MatrixXd weights(classes, dim);
  Eigen::VectorXd bias(classes);
  for (int r = 0; r < classes; ++r) {
    if (static_cast<Eigen::Index>(w[r].size()) != dim) {
      fail(ErrorCode::kFormat, fmt::format("W row {} has wrong length", r));
    }
    for (Eigen::Index c = 0; c < dim; ++c)
      weights(r, c) = w[r][c].get<double>();
    bias[r] = b[r].get<double>();
  }
  return LinearSoftmaxModel(shape, std::move(weights), std::move(bias));
}

}  // namespace

std::vector<Prediction> predict_batch(const Classifier& classifier,
                                      std::span<const Image> images) {
  const ImageShape expected = classifier.input_shape();
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].shape() != expected) {
      fail(
          ErrorCode::kInvalidInput,
          fmt::format("image {} has shape {}, classifier expects {}", i,
                      shape_string(images[i].shape()), shape_string(expected)));
    }
  }
  if (images.empty()) return {};
  auto out = classifier.predict_images(images);
  if (out.size() != images.size()) {
    fail(ErrorCode::kProtocol,
         fmt::format("classifier returned {} predictions for {} images",
                     out.size(), images.size()));
  }
  return out;
}

Prediction predict(const Classifier& classifier, const Image& image) {
  return predict_batch(classifier, std::span<const Image>(&image, 1)).front();
}

Eigen::VectorXd normalized_features(const Image& image) {
  const auto bytes = image.bytes();
  Eigen::VectorXd x(static_cast<Eigen::Index>(bytes.size()));
  for (std::size_t i = 0; i < bytes.size(); ++i) x[i] = bytes[i] / 255.0;
  return x;
}

LinearSoftmaxModel::LinearSoftmaxModel(ImageShape input_shape,
                                       Eigen::MatrixXd weights,
                                       Eigen::VectorXd bias)
    : shape_(input_shape),
      weights_(std::move(weights)),
      bias_(std::move(bias)) {
  if (shape_.height < 1 || shape_.width < 1 ||
      (shape_.channels != 1 && shape_.channels != 3)) {
    fail(ErrorCode::kInvalidArgument, "invalid linear model input shape");
  }
  if (bias_.size() < 2 || weights_.rows() != bias_.size() ||
      weights_.cols() != static_cast<Eigen::Index>(shape_.num_bytes())) {
    fail(ErrorCode::kInvalidArgument,
         fmt::format("linear model expects W of {}x{}, got {}x{}", bias_.size(),
                     shape_.num_bytes(), weights_.rows(), weights_.cols()));
  }
  if (!weights_.allFinite() || !bias_.allFinite()) {
    fail(ErrorCode::kInvalidArgument, "linear model weights must be finite");
  }
}

std::string LinearSoftmaxModel::id() const {
  return fmt::format("linear:{}->{}", shape_string(shape_), bias_.size());
}

Eigen::VectorXd LinearSoftmaxModel::logits(const Image& image) const {
  return weights_ * normalized_features(image) + bias_;
}

std::vector<Prediction> LinearSoftmaxModel::predict_images(
    std::span<const Image> images) const {
  // One matrix-vector product per image keeps batch and single calls
  // bit-identical.
  std::vector<Prediction> out;
  out.reserve(images.size());
  for (const Image& image : images) out.emplace_back(softmax(logits(image)));
  return out;
}

void save_linear_model(const LinearSoftmaxModel& model,
                       const std::filesystem::path& path) {
  const ImageShape s = model.input_shape();
  json j;
  j["format"] = kLinearFormat;
  j["input_shape"] = {s.height, s.width, s.channels};
  j["num_classes"] = model.num_classes();
  json w = json::array();
  for (Eigen::Index r = 0; r < model.weights().rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < model.weights().cols(); ++c) {
      row.push_back(model.weights()(r, c));
    }
    w.push_back(std::move(row));
  }
  j["W"] = std::move(w);
  j["b"] = json(std::vector<double>(model.bias().begin(), model.bias().end()));
  j["normalize"] = "unit_scale";
  write_file_atomic(path, j.dump());
}

LinearSoftmaxModel load_linear_model(const std::filesystem::path& path) {
  const json j = parse_json_file(path);
  if (j.value("format", std::string()) != kLinearFormat) {
    fail(ErrorCode::kFormat,
         path.string() + ": not an " + std::string(kLinearFormat) + " record");
  }
  try {
    return linear_from_json(j);
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
}

QuadrantClassifier::QuadrantClassifier(ImageShape input_shape, Rect region,
                                       double temperature,
                                       std::optional<Rect> inhibit,
                                       double offset)
    : shape_(input_shape),
      region_(region),
      temperature_(temperature),
      inhibit_(inhibit),
      offset_(offset) {
  check_rect(region_, shape_, "region");
  if (inhibit_) check_rect(*inhibit_, shape_, "inhibit");
  if (!(temperature_ > 0.0) || !std::isfinite(temperature_)) {
    fail(ErrorCode::kInvalidArgument, "temperature must be positive");
  }
}

std::string QuadrantClassifier::id() const {
  return fmt::format("quadrant:{},{},{},{}", region_.row, region_.col,
                     region_.height, region_.width);
}

double QuadrantClassifier::class1_logit(const Image& image) const {
  double signal = region_mean(image, region_);
  if (inhibit_) signal -= region_mean(image, *inhibit_);
  return temperature_ * signal + offset_;
}

std::vector<Prediction> QuadrantClassifier::predict_images(
    std::span<const Image> images) const {
  std::vector<Prediction> out;
  out.reserve(images.size());
  for (const Image& image : images) {
    Eigen::Vector2d logits(0.0, class1_logit(image));
    out.emplace_back(softmax(logits));
  }
  return out;
}

ConstantClassifier::ConstantClassifier(ImageShape input_shape,
                                       Prediction output)
    : shape_(input_shape), output_(std::move(output)) {}

std::vector<Prediction> ConstantClassifier::predict_images(
    std::span<const Image> images) const {
  return std::vector<Prediction>(images.size(), output_);
}

void save_quadrant_model(const QuadrantClassifier& model,
                         const std::filesystem::path& path) {
  const ImageShape s = model.input_shape();
  json j;
  j["format"] = kQuadrantFormat;
  j["input_shape"] = {s.height, s.width, s.channels};
  j["region"] = rect_to_json(model.region());
  j["temperature"] = model.temperature();
  j["offset"] = model.offset();
  if (model.inhibit_region()) {
    j["inhibit_region"] = rect_to_json(*model.inhibit_region());
  }
  write_file_atomic(path, j.dump(2));
}

std::unique_ptr<Classifier> load_builtin_classifier(
    const std::filesystem::path& path) {
  const json j = parse_json_file(path);
  const std::string format = j.value("format", std::string());
  try {
    if (format == kLinearFormat) {
      return std::make_unique<LinearSoftmaxModel>(linear_from_json(j));
    }
    if (format == kQuadrantFormat) {
      std::optional<Rect> inhibit;
      if (j.contains("inhibit_region")) {
        inhibit = rect_from_json(j["inhibit_region"]);
      }
      return std::make_unique<QuadrantClassifier>(
          shape_from_json(j.at("input_shape")), rect_from_json(j.at("region")),
          j.at("temperature").get<double>(), inhibit, j.value("offset", 0.0));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
  fail(ErrorCode::kFormat,
       path.string() + ": unknown classifier format '" + format + "'");
}

namespace {

struct Dataset {
  Eigen::MatrixXd features;  // D x n
  Eigen::MatrixXd targets;   // L x n one-hot
};

Dataset make_dataset(std::span<const Image> images, std::span<const int> labels,
                     int classes) {
  Dataset d;
  const auto dim =
      static_cast<Eigen::Index>(images.front().shape().num_bytes());
  const auto n = static_cast<Eigen::Index>(images.size());
  d.features.resize(dim, n);
  d.targets = Eigen::MatrixXd::Zero(classes, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d.features.col(i) = normalized_features(images[i]);
    d.targets(labels[i], i) = 1.0;
  }
  return d;
}

double dataset_loss(const Eigen::MatrixXd& weights, const Eigen::VectorXd& bias,
                    const Dataset& d, Eigen::MatrixXd* probs) {
  Eigen::MatrixXd logits = (weights * d.features).colwise() + bias;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < logits.cols(); ++i) {
    const double shift = logits.col(i).maxCoeff();
    const double lse =
        shift + std::log((logits.col(i).array() - shift).exp().sum());
    Eigen::Index label = 0;
    d.targets.col(i).maxCoeff(&label);
    loss += lse - logits(label, i);
    if (probs) logits.col(i) = (logits.col(i).array() - lse).exp().matrix();
  }
  if (probs) *probs = std::move(logits);
  return loss / static_cast<double>(logits.cols());
}

}  // namespace

double cross_entropy(const LinearSoftmaxModel& model,
                     std::span<const Image> images,
                     std::span<const int> labels) {
  if (images.empty() || images.size() != labels.size()) {
    fail(ErrorCode::kInvalidArgument, "images and labels must match");
  }
  const Dataset d = make_dataset(images, labels, model.num_classes());
  return dataset_loss(model.weights(), model.bias(), d, nullptr);
}

double accuracy(const Classifier& model, std::span<const Image> images,
                std::span<const int> labels) {
  if (images.empty() || images.size() != labels.size()) {
    fail(ErrorCode::kInvalidArgument, "images and labels must match");
  }
  const auto preds = predict_batch(model, images);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    hits += preds[i].top_class() == labels[i];
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

LinearSoftmaxModel train_logistic(std::span<const Image> images,
                                  std::span<const int> labels,
                                  const TrainOptions& options) {
  if (images.empty() || images.size() != labels.size()) {
    fail(ErrorCode::kInvalidArgument,
         "train_logistic needs one label per image");
  }
  const ImageShape shape = images.front().shape();
  for (const Image& image : images) {
    if (image.shape() != shape) {
      fail(ErrorCode::kInvalidArgument, "training images differ in shape");
    }
  }
  if (*std::min_element(labels.begin(), labels.end()) < 0) {
    fail(ErrorCode::kInvalidArgument, "labels must be non-negative");
  }
  const int max_label = *std::max_element(labels.begin(), labels.end());
  const int classes =
      options.num_classes > 0 ? options.num_classes : max_label + 1;
  if (max_label >= classes) {
    fail(ErrorCode::kInvalidArgument, "label exceeds num_classes");
  }
  if (std::set<int>(labels.begin(), labels.end()).size() < 2) {
    fail(ErrorCode::kDegenerateData, "training data contains a single class");
  }
  if (options.epochs < 0 || !(options.learning_rate > 0.0)) {
    fail(ErrorCode::kInvalidArgument, "epochs >= 0 and learning_rate > 0");
  }

  const auto dim = static_cast<Eigen::Index>(shape.num_bytes());
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> init(0.0, options.init_stddev);
  Eigen::MatrixXd weights(classes, dim);
  for (Eigen::Index r = 0; r < weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < weights.cols(); ++c) weights(r, c) = init(rng);
  }
  Eigen::VectorXd bias = Eigen::VectorXd::Zero(classes);

  const Dataset d = make_dataset(images, labels, classes);
  const double inv_n = 1.0 / static_cast<double>(images.size());
  double rate = options.learning_rate;
  Eigen::MatrixXd probs;
  double loss = dataset_loss(weights, bias, d, &probs);
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    const Eigen::MatrixXd residual = probs - d.targets;
    const Eigen::MatrixXd grad_w = inv_n * residual * d.features.transpose();
    const Eigen::VectorXd grad_b = inv_n * residual.rowwise().sum();
    bool accepted = false;
    for (int halving = 0; halving < 40 && !accepted; ++halving) {
      Eigen::MatrixXd next_w = weights - rate * grad_w;
      Eigen::VectorXd next_b = bias - rate * grad_b;
      Eigen::MatrixXd next_probs;
      const double next_loss = dataset_loss(next_w, next_b, d, &next_probs);
      if (next_loss <= loss) {
        weights = std::move(next_w);
        bias = std::move(next_b);
        probs = std::move(next_probs);
        loss = next_loss;
        accepted = true;
      } else {
        rate *= 0.5;
      }
    }
    if (!accepted) break;
  }
  return LinearSoftmaxModel(shape, std::move(weights), std::move(bias));
}

LinearSoftmaxModel randomize_parameters(const LinearSoftmaxModel& model,
                                        double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "fraction must lie in [0, 1]");
  }
  const auto rows = model.weights().rows();
  const auto count = static_cast<Eigen::Index>(
      std::ceil(fraction * static_cast<double>(rows) - 1e-12));
  Eigen::MatrixXd weights = model.weights();
  Eigen::VectorXd bias = model.bias();
  std::mt19937_64 rng(seed);
  for (Eigen::Index r = 0; r < std::min(count, rows); ++r) {
    const auto row = model.weights().row(r).array();
    const double sd = std::sqrt((row - row.mean()).square().mean());
    if (sd > 0.0) {
      std::normal_distribution<double> draw(0.0, sd);
      for (Eigen::Index c = 0; c < weights.cols(); ++c)
        weights(r, c) = draw(rng);
      bias[r] = draw(rng);
    } else {
      weights.row(r).setZero();
      bias[r] = 0.0;
    }
  }
  return LinearSoftmaxModel(model.input_shape(), std::move(weights),
                            std::move(bias));
}

}  // namespace infoattr
