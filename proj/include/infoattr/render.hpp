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

// Raster and attribution-map persistence, heatmaps and overlays.

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "infoattr/attribution_map.hpp"
#include "infoattr/image.hpp"

namespace infoattr {

// 8-bit grayscale/RGB PNG, binary PGM (P5) or PPM (P6), chosen by extension
// on save and by signature on load. Anything else is a kFormat error.
Image load_image(const std::filesystem::path& path);
void save_image(const Image& image, const std::filesystem::path& path);

Image decode_image(std::string_view bytes);
std::string encode_png(const Image& image);
std::string encode_pnm(const Image& image);

enum class ColormapKind {
  // blue (negative) - white (zero) - red (positive), scaled by max |v|
  kDiverging,
  // black (zero) to white (max v); negatives clamp to black
  kSequential,
};

Image render_heatmap(const AttributionMap& map, ColormapKind kind);

// round_half_up(alpha * heat + (1 - alpha) * base) per channel. A grayscale
// base is broadcast to RGB.
Image overlay(const Image& base, const Image& heat, double alpha);

inline constexpr char kMapFormat[] = "infoattr-map-v1";

// JSON with values written at 17 significant digits; NaN/inf are rejected.
std::string serialize_map(const AttributionMap& map);
AttributionMap parse_map(std::string_view text);
void save_map(const AttributionMap& map, const std::filesystem::path& path);
AttributionMap load_map(const std::filesystem::path& path);

}  // namespace infoattr
