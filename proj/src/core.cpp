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

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <string>
#include <thread>

#include "infoattr/attribution_map.hpp"
#include "infoattr/errors.hpp"
#include "infoattr/parallel.hpp"
#include "infoattr/prediction.hpp"

namespace infoattr {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return "invalid-argument";
    case ErrorCode::kInvalidGeometry:
      return "invalid-geometry";
    case ErrorCode::kInvalidInput:
      return "invalid-input";
    case ErrorCode::kDegenerateData:
      return "degenerate-data";
    case ErrorCode::kUnsupportedOracle:
      return "unsupported-oracle";
    case ErrorCode::kUndefinedCorrelation:
      return "undefined-correlation";
    case ErrorCode::kFormat:
      return "format";
    case ErrorCode::kIo:
      return "io";
    case ErrorCode::kProtocol:
      return "protocol";
  }
  return "unknown";
}

std::string_view map_kind_name(MapKind kind) {
  switch (kind) {
    case MapKind::kPmi:
      return "pmi";
    case MapKind::kIg:
      return "ig";
    case MapKind::kOcclusion:
      return "occlusion";
    case MapKind::kPda:
      return "pda";
  }
  return "unknown";
}

MapKind parse_map_kind(std::string_view name) {
  for (MapKind k :
       {MapKind::kPmi, MapKind::kIg, MapKind::kOcclusion, MapKind::kPda}) {
    if (map_kind_name(k) == name) return k;
  }
  fail(ErrorCode::kFormat, "unknown map kind '" + std::string(name) + "'");
}

Prediction::Prediction(Eigen::VectorXd probs) : probs_(std::move(probs)) {
  if (probs_.size() < 2) {
    fail(ErrorCode::kInvalidInput, "a prediction needs at least 2 classes");
  }
  if (!probs_.allFinite() || (probs_.array() < 0.0).any()) {
    fail(ErrorCode::kInvalidInput,
         "prediction entries must be finite and non-negative");
  }
  if (std::abs(probs_.sum() - 1.0) > kSumTolerance) {
    fail(ErrorCode::kInvalidInput,
         "prediction sums to " + std::to_string(probs_.sum()));
  }
}

int Prediction::top_class() const {
  Eigen::Index best = 0;
  probs_.maxCoeff(&best);
  return static_cast<int>(best);
}

std::vector<int> Prediction::top_k(int k) const {
  std::vector<int> idx(probs_.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return probs_[a] > probs_[b]; });
  idx.resize(std::clamp<std::size_t>(k, 0, idx.size()));
  return idx;
}

int default_workers() {
  if (const char* env = std::getenv("INFOATTR_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1 && v <= 4096) {
      return static_cast<int>(v);
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace infoattr
