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

#include "infoattr/render.hpp"

#include <fmt/format.h>
#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <memory>
#include <nlohmann/json.hpp>

#include "infoattr/errors.hpp"
#include "infoattr/file_io.hpp"

namespace infoattr {
namespace {

using json = nlohmann::json;

std::uint8_t round_half_up(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

bool has_png_signature(std::string_view bytes) {
  return bytes.size() >= 8 &&
         png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) ==
             0;
}

Image decode_png(std::string_view bytes) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    fail(ErrorCode::kFormat, std::string("PNG: ") + img.message);
  }
  // Inspect the real header: the simplified reader would silently convert
  // 16-bit or palette data.
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  int bit_depth = 0;
  int color_type = 0;
  struct Cursor {
    std::string_view data;
    std::size_t pos = 0;
  } cursor{bytes};
  if (png && info && !setjmp(png_jmpbuf(png))) {
    png_set_read_fn(png, &cursor,
                    [](png_structp p, png_bytep out, png_size_t n) {
                      auto* c = static_cast<Cursor*>(png_get_io_ptr(p));
                      if (n > c->data.size() - c->pos)
                        png_error(p, "truncated");
                      std::copy_n(c->data.data() + c->pos, n, out);
                      c->pos += n;
                    });
    png_read_info(png, info);
    bit_depth = png_get_bit_depth(png, info);
    color_type = png_get_color_type(png, info);
  }
  png_destroy_read_struct(&png, &info, nullptr);

  if (bit_depth != 8 ||
      (color_type != PNG_COLOR_TYPE_GRAY && color_type != PNG_COLOR_TYPE_RGB)) {
    png_image_free(&img);
    fail(ErrorCode::kFormat,
         fmt::format("PNG: only 8-bit grayscale or RGB is supported (bit depth "
                     "{}, color type {})",
                     bit_depth, color_type));
  }
  const int channels = color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
  img.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> data(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, data.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    fail(ErrorCode::kFormat, "PNG: " + msg);
  }
  return Image(static_cast<int>(img.height), static_cast<int>(img.width),
               channels, std::move(data));
}

// Parses the whitespace/comment separated PNM header fields.
class PnmHeader {
 public:
  explicit PnmHeader(std::string_view bytes) : bytes_(bytes), pos_(2) {}

  int next_int() {
    skip_space_and_comments();
    std::size_t start = pos_;
    while (pos_ < bytes_.size() &&
           std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      ++pos_;
    }
    if (start == pos_ || pos_ - start > 9) {
      fail(ErrorCode::kFormat, "PNM: malformed header");
    }
    return std::stoi(std::string(bytes_.substr(start, pos_ - start)));
  }

  // Exactly one whitespace byte separates the header from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size() ||
        !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      fail(ErrorCode::kFormat, "PNM: malformed header");
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view bytes_;
  std::size_t pos_;
};

Image decode_pnm(std::string_view bytes) {
  const int channels = bytes.substr(0, 2) == "P6" ? 3 : 1;
  PnmHeader header(bytes);
  const int width = header.next_int();
  const int height = header.next_int();
  const int maxval = header.next_int();
  if (maxval != 255) {
    fail(ErrorCode::kFormat,
         fmt::format("PNM: only 8-bit rasters are supported (maxval {})",
                     maxval));
  }
  if (width < 1 || height < 1) fail(ErrorCode::kFormat, "PNM: empty raster");
  const std::size_t offset = header.raster_offset();
  const std::size_t need = static_cast<std::size_t>(width) * height * channels;
  if (bytes.size() - offset < need) {
    fail(ErrorCode::kFormat, "PNM: raster is truncated");
  }
  const auto raster = bytes.substr(offset, need);
  return Image(height, width, channels,
               std::vector<std::uint8_t>(raster.begin(), raster.end()));
}

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext;
}

void check_finite(const AttributionMap& map) {
  if (!map.values.allFinite()) {
    fail(ErrorCode::kInvalidArgument, "attribution map contains NaN or inf");
  }
}

}  // namespace

Image decode_image(std::string_view bytes) {
  if (has_png_signature(bytes)) return decode_png(bytes);
  if (bytes.size() >= 2 &&
      (bytes.substr(0, 2) == "P5" || bytes.substr(0, 2) == "P6")) {
    return decode_pnm(bytes);
  }
  fail(ErrorCode::kFormat, "unsupported image format (expected PNG, P5 or P6)");
}

std::string encode_png(const Image& image) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  img.format = image.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, image.bytes().data(),
                                 0, nullptr)) {
    fail(ErrorCode::kIo, std::string("PNG encode: ") + img.message);
  }
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&img, out.data(), &size, 0,
                                 image.bytes().data(), 0, nullptr)) {
    fail(ErrorCode::kIo, std::string("PNG encode: ") + img.message);
  }
  out.resize(size);
  return out;
}

std::string encode_pnm(const Image& image) {
  std::string out =
      fmt::format("{}\n{} {}\n255\n", image.channels() == 3 ? "P6" : "P5",
                  image.width(), image.height());
  out.append(reinterpret_cast<const char*>(image.bytes().data()),
             image.bytes().size());
  return out;
}

Image load_image(const std::filesystem::path& path) {
  try {
    return decode_image(read_file(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void save_image(const Image& image, const std::filesystem::path& path) {
  const std::string ext = lower_extension(path);
  if (ext == ".png") {
    write_file_atomic(path, encode_png(image));
  } else if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") {
    write_file_atomic(path, encode_pnm(image));
  } else {
    fail(ErrorCode::kFormat, "unsupported image extension '" + ext + "'");
  }
}

Image render_heatmap(const AttributionMap& map, ColormapKind kind) {
  check_finite(map);
  const int h = map.height();
  const int w = map.width();
  Image out(h, w, 3);
  if (kind == ColormapKind::kDiverging) {
    const double scale = map.values.cwiseAbs().maxCoeff();
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        const double t = scale > 0.0 ? map.values(r, c) / scale : 0.0;
        const std::uint8_t fade = round_half_up(255.0 * (1.0 - std::abs(t)));
        out.at(r, c, 0) = t < 0.0 ? fade : 255;
        out.at(r, c, 1) = fade;
        out.at(r, c, 2) = t > 0.0 ? fade : 255;
      }
    }
  } else {
    const double scale = std::max(map.values.maxCoeff(), 0.0);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        const double t =
            scale > 0.0 ? std::clamp(map.values(r, c) / scale, 0.0, 1.0) : 0.0;
        const std::uint8_t v = round_half_up(255.0 * t);
        for (int ch = 0; ch < 3; ++ch) out.at(r, c, ch) = v;
      }
    }
  }
  return out;
}

Image overlay(const Image& base, const Image& heat, double alpha) {
  if (base.height() != heat.height() || base.width() != heat.width()) {
    fail(ErrorCode::kInvalidArgument, "overlay: images differ in dimensions");
  }
  if (heat.channels() != 3) {
    fail(ErrorCode::kInvalidArgument, "overlay: heat image must be RGB");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "overlay: alpha must lie in [0, 1]");
  }
  Image out(base.height(), base.width(), 3);
  for (int r = 0; r < base.height(); ++r) {
    for (int c = 0; c < base.width(); ++c) {
      for (int ch = 0; ch < 3; ++ch) {
        const double b = base.at(r, c, base.channels() == 3 ? ch : 0);
        out.at(r, c, ch) =
            round_half_up(alpha * heat.at(r, c, ch) + (1.0 - alpha) * b);
      }
    }
  }
  return out;
}

std::string serialize_map(const AttributionMap& map) {
  check_finite(map);
  if (!std::isfinite(map.meta.eps)) {
    fail(ErrorCode::kInvalidArgument, "map meta eps must be finite");
  }
  std::string out = "{";
  out += fmt::format("\"format\":\"{}\",\"kind\":{}", kMapFormat,
                     json(std::string(map_kind_name(map.kind))).dump());
  if (is_class_specific(map.kind)) {
    out += fmt::format(",\"class\":{}", map.class_index);
  }
  out += fmt::format(",\"height\":{},\"width\":{},\"values\":[", map.height(),
                     map.width());
  const auto flat = map.values.reshaped<Eigen::RowMajor>();
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    if (i) out += ',';
    out += fmt::format("{:.17g}", flat[i]);
  }
  const MapMeta& m = map.meta;
  out += fmt::format(
      "],\"meta\":{{\"K\":{},\"N\":{},\"stride\":{},\"eps\":{:.17g},"
      "\"seed\":{},\"sampler\":{},\"classifier\":{}}}}}\n",
      m.patch_size, m.samples, m.stride, m.eps, m.seed,
      json(m.sampler_id).dump(), json(m.classifier_id).dump());
  return out;
}

AttributionMap parse_map(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("map: invalid JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("format", std::string()) != kMapFormat) {
    fail(ErrorCode::kFormat,
         std::string("map: format tag must be ") + kMapFormat);
  }
  try {
    AttributionMap map;
    map.kind = parse_map_kind(j.at("kind").get<std::string>());
    if (is_class_specific(map.kind)) map.class_index = j.at("class").get<int>();
    const int h = j.at("height").get<int>();
    const int w = j.at("width").get<int>();
    const auto& values = j.at("values");
    if (h < 1 || w < 1 || !values.is_array() ||
        values.size() != static_cast<std::size_t>(h) * w) {
      fail(ErrorCode::kFormat, "map: values do not match height x width");
    }
    map.values.resize(h, w);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        map.values(r, c) =
            values[static_cast<std::size_t>(r) * w + c].get<double>();
      }
    }
    const auto& m = j.at("meta");
    map.meta = {m.at("K").get<int>(),
                m.at("N").get<int>(),
                m.at("stride").get<int>(),
                m.at("eps").get<double>(),
                m.at("seed").get<std::uint64_t>(),
                m.at("sampler").get<std::string>(),
                m.at("classifier").get<std::string>()};
    return map;
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("map: ") + e.what());
  }
}

void save_map(const AttributionMap& map, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_map(map));
}

AttributionMap load_map(const std::filesystem::path& path) {
  return parse_map(read_file(path));
}

}  // namespace infoattr
