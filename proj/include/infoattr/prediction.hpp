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

#pragma once

#include <Eigen/Dense>
#include <vector>

namespace infoattr {

// Classifier posterior over L >= 2 classes.
class Prediction {
 public:
  static constexpr double kSumTolerance = 1e-6;

  // Throws kInvalidInput unless entries are finite, non-negative and sum to 1
  // within kSumTolerance.
  explicit Prediction(Eigen::VectorXd probs);

  const Eigen::VectorXd& probs() const { return probs_; }
  int num_classes() const { return static_cast<int>(probs_.size()); }
  double operator[](int c) const { return probs_[c]; }

  int top_class() const;
  // Indices of the k largest entries, ties to the lower index.
  std::vector<int> top_k(int k) const;

  friend bool operator==(const Prediction& a, const Prediction& b) {
    return a.probs_.size() == b.probs_.size() &&
           (a.probs_.array() == b.probs_.array()).all();
  }

 private:
  Eigen::VectorXd probs_;
};

// Numerically stable softmax of a logit vector.
template <typename Derived>
Eigen::VectorXd softmax(const Eigen::MatrixBase<Derived>& logits) {
  const double shift = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - shift).exp().matrix();
  return e / e.sum();
}

}  // namespace infoattr
