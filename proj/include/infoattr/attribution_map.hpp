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
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "infoattr/errors.hpp"
#include "infoattr/image.hpp"

namespace infoattr {

template <typename Scalar>
using MapValues =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class MapKind { kPmi, kIg, kOcclusion, kPda };

std::string_view map_kind_name(MapKind kind);
MapKind parse_map_kind(std::string_view name);

// True for kinds that explain one class (everything except IG).
inline bool is_class_specific(MapKind kind) { return kind != MapKind::kIg; }

struct MapMeta {
  int patch_size = 0;
  int samples = 0;
  int stride = 0;
  double eps = 0.0;
  std::uint64_t seed = 0;
  std::string sampler_id;
  std::string classifier_id;

  friend bool operator==(const MapMeta&, const MapMeta&) = default;
};

// H x W attribution in bits (or in probability units for occlusion).
template <typename Scalar>
struct BasicAttributionMap {
  MapKind kind = MapKind::kIg;
  int class_index = -1;
  MapValues<Scalar> values;
  MapMeta meta;

  int height() const { return static_cast<int>(values.rows()); }
  int width() const { return static_cast<int>(values.cols()); }

  friend bool operator==(const BasicAttributionMap& a,
                         const BasicAttributionMap& b) {
    return a.kind == b.kind && a.class_index == b.class_index &&
           a.meta == b.meta && a.values.rows() == b.values.rows() &&
           a.values.cols() == b.values.cols() &&
           (a.values.array() == b.values.array()).all();
  }
};

using AttributionMap = BasicAttributionMap<double>;

// Spreads one value per grid patch over its pixels. Pixels covered by several
// patches receive the mean of those patch values.
template <typename Scalar>
MapValues<Scalar> accumulate_patch_values(const PatchGrid& grid,
                                          std::span<const Scalar> per_patch,
                                          int height, int width) {
  if (per_patch.size() != grid.size()) {
    fail(ErrorCode::kInvalidArgument,
         "accumulate_patch_values: expected " + std::to_string(grid.size()) +
             " patch values, got " + std::to_string(per_patch.size()));
  }
  MapValues<Scalar> sum = MapValues<Scalar>::Zero(height, width);
  Eigen::MatrixXi count = Eigen::MatrixXi::Zero(height, width);
  const int k = grid.patch_size;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Origin o = grid.origins[i];
    sum.block(o.row, o.col, k, k).array() += per_patch[i];
    count.block(o.row, o.col, k, k).array() += 1;
  }
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      if (count(r, c) > 1) sum(r, c) /= static_cast<Scalar>(count(r, c));
    }
  }
  return sum;
}

}  // namespace infoattr
