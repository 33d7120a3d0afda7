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

// Point-wise mutual information and information gain in bits.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "infoattr/errors.hpp"

namespace infoattr {

inline constexpr double kDefaultEps = 1e-13;

// log2((p_full + eps) / (p_marg + eps)). eps sits in both terms so that
// pmi(p, p, eps) == 0 exactly.
template <typename Scalar>
Scalar pmi(Scalar p_full, Scalar p_marg, Scalar eps) {
  using std::log2;
  return log2((p_full + eps) / (p_marg + eps));
}

// Expected PMI under `full`: sum_c full[c] * pmi(full[c], marg[c], eps).
// Equals KL(full || marg) in bits for eps = 0. Terms with full[c] == 0
// contribute nothing.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar ig(const Eigen::MatrixBase<DerivedA>& full,
                             const Eigen::MatrixBase<DerivedB>& marg,
                             typename DerivedA::Scalar eps) {
  using Scalar = typename DerivedA::Scalar;
  if (full.size() != marg.size()) {
    fail(ErrorCode::kInvalidArgument,
         "ig: distributions have different lengths");
  }
  Scalar total = 0;
  for (Eigen::Index c = 0; c < full.size(); ++c) {
    const Scalar p = full.coeff(c);
    if (p == Scalar(0)) continue;
    total += p * pmi<Scalar>(p, marg.coeff(c), eps);
  }
  return total;
}

// Weight of evidence in bits: log2 odds(p_full) - log2 odds(p_marg), both
// probabilities clamped into [eps, 1 - eps] first.
template <typename Scalar>
Scalar weight_of_evidence(Scalar p_full, Scalar p_marg, Scalar eps) {
  using std::log2;
  const auto log_odds = [eps](Scalar p) {
    p = std::clamp(p, eps, Scalar(1) - eps);
    return log2(p / (Scalar(1) - p));
  };
  return log_odds(p_full) - log_odds(p_marg);
}

}  // namespace infoattr
