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

// Brute-force reference computations used to check the engine. Nothing here
// calls engine, sampler or classifier code: scenes carry their own weights
// and candidate patches, and every quantity is recomputed with plain loops.

#pragma once

#include <cstdint>
#include <vector>

namespace infoattr::oracle {

// A tiny grayscale scene with a linear softmax model and an explicit,
// context-independent candidate set for every patch.
struct ToyScene {
  int height = 6;
  int width = 6;
  int patch_size = 2;
  int num_classes = 2;
  std::vector<std::uint8_t> pixels;                   // height*width bytes
  std::vector<std::vector<double>> weights;           // [class][pixel]
  std::vector<double> bias;                           // [class]
  std::vector<std::vector<std::uint8_t>> candidates;  // K*K bytes each
};

ToyScene make_toy_scene(std::uint64_t seed, int num_candidates);

// softmax(W·x/255 + b) with long-double accumulation.
std::vector<double> oracle_predict(const ToyScene& scene,
                                   const std::vector<std::uint8_t>& pixels);

// Σ_j (1/m)·predict(image with candidate j at origin). Refuses supports
// larger than 10^4 outcomes.
std::vector<double> oracle_marginal(const ToyScene& scene, int row, int col);

// Σ p·log2(p/q) over entries with p > 0.
double oracle_kl(const std::vector<double>& p, const std::vector<double>& q);

}  // namespace infoattr::oracle
