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

#include "infoattr/image.hpp"

#include <algorithm>
#include <string>

#include "infoattr/errors.hpp"

namespace infoattr {
namespace {

void check_shape(int height, int width, int channels) {
  if (height < 1 || width < 1) {
    fail(ErrorCode::kInvalidArgument,
         "image dimensions must be positive, got " + std::to_string(height) +
             "x" + std::to_string(width));
  }
  if (channels != 1 && channels != 3) {
    fail(ErrorCode::kInvalidArgument,
         "image must have 1 or 3 channels, got " + std::to_string(channels));
  }
}

std::vector<int> axis_origins(int dim, int patch_size, int stride) {
  std::vector<int> out;
  for (int p = 0; p + patch_size <= dim; p += stride) out.push_back(p);
  if (out.back() + patch_size < dim) out.push_back(dim - patch_size);
  return out;
}

void check_patch_inside(const Image& image, Origin origin, int patch_size) {
  if (patch_size < 1 || origin.row < 0 || origin.col < 0 ||
      origin.row + patch_size > image.height() ||
      origin.col + patch_size > image.width()) {
    fail(ErrorCode::kInvalidGeometry,
         "patch (" + std::to_string(origin.row) + "," +
             std::to_string(origin.col) + ") of size " +
             std::to_string(patch_size) + " does not fit a " +
             std::to_string(image.height()) + "x" +
             std::to_string(image.width()) + " image");
  }
}

}  // namespace

Image::Image(int height, int width, int channels, std::uint8_t fill) {
  check_shape(height, width, channels);
  shape_ = {height, width, channels};
  data_.assign(shape_.num_bytes(), fill);
}

Image::Image(int height, int width, int channels,
             std::vector<std::uint8_t> data) {
  check_shape(height, width, channels);
  shape_ = {height, width, channels};
  if (data.size() != shape_.num_bytes()) {
    fail(ErrorCode::kInvalidArgument,
         "image data has " + std::to_string(data.size()) + " bytes, expected " +
             std::to_string(shape_.num_bytes()));
  }
  data_ = std::move(data);
}

PatchGrid build_patch_grid(int height, int width, int patch_size, int stride) {
  if (patch_size < 1 || patch_size > std::min(height, width)) {
    fail(ErrorCode::kInvalidGeometry,
         "patch size " + std::to_string(patch_size) + " does not fit a " +
             std::to_string(height) + "x" + std::to_string(width) + " image");
  }
  if (stride < 1 || stride > patch_size) {
    fail(ErrorCode::kInvalidGeometry, "stride must lie in [1, " +
                                          std::to_string(patch_size) +
                                          "], got " + std::to_string(stride));
  }
  PatchGrid grid{patch_size, stride, height, width, {}};
  const auto rows = axis_origins(height, patch_size, stride);
  const auto cols = axis_origins(width, patch_size, stride);
  grid.origins.reserve(rows.size() * cols.size());
  for (int r : rows) {
    for (int c : cols) grid.origins.push_back({r, c});
  }
  return grid;
}

ContextWindow::ContextWindow(int patch_size, int channels,
                             std::vector<std::uint8_t> values)
    : patch_size_(patch_size), channels_(channels), values_(std::move(values)) {
  const std::size_t side = 3 * static_cast<std::size_t>(patch_size);
  if (patch_size < 1 || values_.size() != side * side * channels) {
    fail(ErrorCode::kInvalidArgument, "context window size mismatch");
  }
}

PatchBytes ContextWindow::center_patch() const {
  const int k = patch_size_;
  PatchBytes out;
  out.reserve(static_cast<std::size_t>(k) * k * channels_);
  for (int r = k; r < 2 * k; ++r) {
    for (int c = k; c < 2 * k; ++c) {
      for (int ch = 0; ch < channels_; ++ch) out.push_back(at(r, c, ch));
    }
  }
  return out;
}

int reflect_index(int index, int size) {
  if (size == 1) return 0;
  const int period = 2 * (size - 1);
  int m = index % period;
  if (m < 0) m += period;
  return m < size ? m : period - m;
}

ContextWindow extract_context(const Image& image, Origin origin,
                              int patch_size) {
  check_patch_inside(image, origin, patch_size);
  const int side = 3 * patch_size;
  const int channels = image.channels();
  std::vector<std::uint8_t> values;
  values.reserve(static_cast<std::size_t>(side) * side * channels);
  for (int r = 0; r < side; ++r) {
    const int src_r =
        reflect_index(origin.row - patch_size + r, image.height());
    for (int c = 0; c < side; ++c) {
      const int src_c =
          reflect_index(origin.col - patch_size + c, image.width());
      for (int ch = 0; ch < channels; ++ch) {
        values.push_back(image.at(src_r, src_c, ch));
      }
    }
  }
  return ContextWindow(patch_size, channels, std::move(values));
}

PatchBytes read_patch(const Image& image, Origin origin, int patch_size) {
  check_patch_inside(image, origin, patch_size);
  PatchBytes out;
  out.reserve(static_cast<std::size_t>(patch_size) * patch_size *
              image.channels());
  for (int r = 0; r < patch_size; ++r) {
    const auto row = image.bytes().subspan(
        image.index(origin.row + r, origin.col, 0),
        static_cast<std::size_t>(patch_size) * image.channels());
    out.insert(out.end(), row.begin(), row.end());
  }
  return out;
}

void write_patch(Image& image, Origin origin, int patch_size,
                 std::span<const std::uint8_t> values) {
  check_patch_inside(image, origin, patch_size);
  const std::size_t row_bytes =
      static_cast<std::size_t>(patch_size) * image.channels();
  if (values.size() != row_bytes * patch_size) {
    fail(ErrorCode::kInvalidArgument,
         "patch values have " + std::to_string(values.size()) +
             " bytes, expected " + std::to_string(row_bytes * patch_size));
  }
  for (int r = 0; r < patch_size; ++r) {
    std::copy_n(
        values.begin() + r * row_bytes, row_bytes,
        image.bytes().begin() + image.index(origin.row + r, origin.col, 0));
  }
}

Image apply_patch(const Image& image, Origin origin, int patch_size,
                  std::span<const std::uint8_t> values) {
  Image out = image;
  write_patch(out, origin, patch_size, values);
  return out;
}

}  // namespace infoattr
