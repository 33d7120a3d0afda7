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

// Byte rasters and the patch geometry shared by samplers and the engine.

#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace infoattr {

struct ImageShape {
  int height = 0;
  int width = 0;
  int channels = 0;

  std::size_t num_bytes() const {
    return static_cast<std::size_t>(height) * width * channels;
  }
  friend bool operator==(const ImageShape&, const ImageShape&) = default;
};

// H x W x C unsigned-byte raster, row-major, channel-last. C is 1 or 3.
class Image {
 public:
  Image() = default;
  Image(int height, int width, int channels, std::uint8_t fill = 0);
  Image(int height, int width, int channels, std::vector<std::uint8_t> data);

  int height() const { return shape_.height; }
  int width() const { return shape_.width; }
  int channels() const { return shape_.channels; }
  const ImageShape& shape() const { return shape_; }
  bool empty() const { return data_.empty(); }

  std::size_t index(int row, int col, int channel) const {
    return (static_cast<std::size_t>(row) * shape_.width + col) *
               shape_.channels +
           channel;
  }
  std::uint8_t at(int row, int col, int channel = 0) const {
    return data_[index(row, col, channel)];
  }
  std::uint8_t& at(int row, int col, int channel = 0) {
    return data_[index(row, col, channel)];
  }

  std::span<const std::uint8_t> bytes() const { return data_; }
  std::span<std::uint8_t> bytes() { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  ImageShape shape_;
  std::vector<std::uint8_t> data_;
};

struct Origin {
  int row = 0;
  int col = 0;
  friend auto operator<=>(const Origin&, const Origin&) = default;
};

// K x K x C patch bytes, row-major, channel-last.
using PatchBytes = std::vector<std::uint8_t>;

struct PatchGrid {
  int patch_size = 0;
  int stride = 0;
  int height = 0;
  int width = 0;
  std::vector<Origin> origins;

  std::size_t size() const { return origins.size(); }
};

// Origins step by `stride`; a final row/col that would overflow is clamped to
// (dim - K) so every pixel is covered. Throws kInvalidGeometry when K does
// not fit or the stride is out of [1, K].
PatchGrid build_patch_grid(int height, int width, int patch_size, int stride);

// 3K x 3K x C neighbourhood of a K x K patch. The centre K x K block is the
// hidden patch; its original bytes are kept so oracles can recover them.
class ContextWindow {
 public:
  ContextWindow(int patch_size, int channels, std::vector<std::uint8_t> values);

  int patch_size() const { return patch_size_; }
  int side() const { return 3 * patch_size_; }
  int channels() const { return channels_; }

  std::uint8_t at(int row, int col, int channel = 0) const {
    return values_[(static_cast<std::size_t>(row) * side() + col) * channels_ +
                   channel];
  }
  bool is_masked(int row, int col) const {
    return row >= patch_size_ && row < 2 * patch_size_ && col >= patch_size_ &&
           col < 2 * patch_size_;
  }
  std::span<const std::uint8_t> bytes() const { return values_; }

  PatchBytes center_patch() const;

  friend bool operator==(const ContextWindow&, const ContextWindow&) = default;

 private:
  int patch_size_;
  int channels_;
  std::vector<std::uint8_t> values_;
};

// Maps any integer coordinate into [0, size) by mirror reflection without
// repeating the edge sample (..., 2, 1, 0, 1, 2, ...).
int reflect_index(int index, int size);

ContextWindow extract_context(const Image& image, Origin origin,
                              int patch_size);

PatchBytes read_patch(const Image& image, Origin origin, int patch_size);

Image apply_patch(const Image& image, Origin origin, int patch_size,
                  std::span<const std::uint8_t> values);

// In-place variant used on batch buffers.
void write_patch(Image& image, Origin origin, int patch_size,
                 std::span<const std::uint8_t> values);

}  // namespace infoattr
