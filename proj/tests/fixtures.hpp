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

// Synthetic datasets shared by the unit tests and the acceptance binary.

#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "infoattr/classifier.hpp"
#include "infoattr/image.hpp"

namespace infoattr::fixtures {

inline Image noise_image(int h, int w, int c, int lo, int hi,
                         std::mt19937_64& rng) {
  std::uniform_int_distribution<int> byte(lo, hi);
  Image img(h, w, c);
  for (auto& v : img.bytes()) v = static_cast<std::uint8_t>(byte(rng));
  return img;
}

inline void fill_rect(Image& img, const Rect& r, int lo, int hi,
                      std::mt19937_64& rng) {
  std::uniform_int_distribution<int> byte(lo, hi);
  for (int y = r.row; y < r.row + r.height; ++y) {
    for (int x = r.col; x < r.col + r.width; ++x) {
      for (int ch = 0; ch < img.channels(); ++ch) {
        img.at(y, x, ch) = static_cast<std::uint8_t>(byte(rng));
      }
    }
  }
}

struct LabeledSet {
  std::vector<Image> images;
  std::vector<int> labels;
};

// Class 0 carries a bright 6x6 blob in the top-left quadrant, class 1 in the
// bottom-right quadrant, both at random positions over dark noise.
inline LabeledSet two_blob_dataset(int n, int size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  LabeledSet out;
  const int half = size / 2;
  const int blob = std::min(6, half);
  std::uniform_int_distribution<int> pos(0, half - blob);
  for (int i = 0; i < n; ++i) {
    const int label = i % 2;
    Image img = noise_image(size, size, 1, 0, 90, rng);
    const int offset = label == 0 ? 0 : half;
    fill_rect(img, {offset + pos(rng), offset + pos(rng), blob, blob}, 200, 255,
              rng);
    out.images.push_back(std::move(img));
    out.labels.push_back(label);
  }
  return out;
}

}  // namespace infoattr::fixtures
