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

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "infoattr/attribution_map.hpp"
#include "infoattr/errors.hpp"
#include "test_util.hpp"

namespace infoattr {
namespace {

using testing::random_image;

std::vector<Origin> origins_of(int h, int w, int k, int s) {
  return build_patch_grid(h, w, k, s).origins;
}

TEST(PatchGridTest, ExactTiling) {
  EXPECT_EQ(origins_of(16, 16, 8, 8),
            (std::vector<Origin>{{0, 0}, {0, 8}, {8, 0}, {8, 8}}));
}

TEST(PatchGridTest, ClampsLastOrigin) {
  EXPECT_EQ(origins_of(10, 10, 8, 8),
            (std::vector<Origin>{{0, 0}, {0, 2}, {2, 0}, {2, 2}}));
}

TEST(PatchGridTest, SinglePatch) {
  EXPECT_EQ(origins_of(8, 8, 8, 8), (std::vector<Origin>{{0, 0}}));
}

TEST(PatchGridTest, RejectsOversizedPatch) {
  try {
    build_patch_grid(6, 10, 8, 8);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidGeometry);
  }
}

TEST(PatchGridTest, RejectsBadStride) {
  EXPECT_THROW(build_patch_grid(16, 16, 4, 0), Error);
  EXPECT_THROW(build_patch_grid(16, 16, 4, 5), Error);
}

TEST(PatchGridTest, CoversEveryPixelExhaustively) {
  for (int h = 1; h <= 32; ++h) {
    for (int w = 1; w <= 32; ++w) {
      for (int k = 1; k <= std::min({8, h, w}); ++k) {
        for (int s = 1; s <= k; ++s) {
          const PatchGrid g = build_patch_grid(h, w, k, s);
          std::vector<char> covered(h * w, 0);
          std::set<Origin> unique(g.origins.begin(), g.origins.end());
          ASSERT_EQ(unique.size(), g.size());
          for (const Origin o : g.origins) {
            ASSERT_LE(o.row + k, h);
            ASSERT_LE(o.col + k, w);
            for (int r = 0; r < k; ++r) {
              for (int c = 0; c < k; ++c)
                covered[(o.row + r) * w + o.col + c] = 1;
            }
          }
          ASSERT_TRUE(std::all_of(covered.begin(), covered.end(),
                                  [](char v) { return v == 1; }))
              << h << "x" << w << " K=" << k << " stride=" << s;
        }
      }
    }
  }
}

TEST(ReflectIndexTest, MirrorsWithoutRepeatingEdge) {
  EXPECT_EQ(reflect_index(-1, 5), 1);
  EXPECT_EQ(reflect_index(-4, 5), 4);
  EXPECT_EQ(reflect_index(5, 5), 3);
  EXPECT_EQ(reflect_index(8, 5), 0);
  EXPECT_EQ(reflect_index(3, 1), 0);
}

TEST(ContextTest, InteriorPatchNeedsNoPadding) {
  const Image img = random_image(32, 32, 3, 1);
  const ContextWindow ctx = extract_context(img, {8, 8}, 8);
  EXPECT_EQ(ctx.side(), 24);
  for (int r = 0; r < 24; ++r) {
    for (int c = 0; c < 24; ++c) {
      for (int ch = 0; ch < 3; ++ch) {
        ASSERT_EQ(ctx.at(r, c, ch), img.at(r, c, ch));
      }
    }
  }
  EXPECT_EQ(ctx.center_patch(), read_patch(img, {8, 8}, 8));
}

TEST(ContextTest, ReflectsAtCornerOfTinyImage) {
  // 3x3 image with K=1 at (0,0): the window covers rows/cols -1..1.
  const Image img(3, 3, 1,
                  std::vector<std::uint8_t>{1, 2, 3, 4, 5, 6, 7, 8, 9});
  const ContextWindow ctx = extract_context(img, {0, 0}, 1);
  const std::vector<std::uint8_t> expected{5, 4, 5, 2, 1, 2, 5, 4, 5};
  EXPECT_EQ(std::vector<std::uint8_t>(ctx.bytes().begin(), ctx.bytes().end()),
            expected);
  EXPECT_TRUE(ctx.is_masked(1, 1));
  EXPECT_FALSE(ctx.is_masked(0, 1));
}

TEST(ContextTest, CornerOfLargeImageReflectsRowsOneToK) {
  const Image img = random_image(32, 32, 1, 2);
  const ContextWindow ctx = extract_context(img, {0, 0}, 8);
  for (int r = 0; r < 8; ++r) {
    for (int c = 8; c < 24; ++c) {
      ASSERT_EQ(ctx.at(r, c), img.at(8 - r, c - 8));
    }
  }
}

TEST(ContextTest, ConstantImageGivesConstantWindow) {
  const Image img(10, 12, 3, std::uint8_t{77});
  const ContextWindow ctx = extract_context(img, {0, 4}, 4);
  for (auto v : ctx.bytes()) ASSERT_EQ(v, 77);
}

TEST(ContextTest, MirrorSymmetry) {
  const Image img = random_image(20, 17, 3, 3);
  Image mirrored(20, 17, 3);
  for (int r = 0; r < 20; ++r) {
    for (int c = 0; c < 17; ++c) {
      for (int ch = 0; ch < 3; ++ch)
        mirrored.at(r, 16 - c, ch) = img.at(r, c, ch);
    }
  }
  const int k = 4;
  for (const Origin o : build_patch_grid(20, 17, k, 1).origins) {
    const ContextWindow a = extract_context(img, o, k);
    const ContextWindow b =
        extract_context(mirrored, {o.row, 17 - k - o.col}, k);
    for (int r = 0; r < 3 * k; ++r) {
      for (int c = 0; c < 3 * k; ++c) {
        for (int ch = 0; ch < 3; ++ch) {
          ASSERT_EQ(a.at(r, c, ch), b.at(r, 3 * k - 1 - c, ch));
        }
      }
    }
  }
}

TEST(ApplyPatchTest, OriginalValuesAreIdentity) {
  const Image img = random_image(12, 12, 3, 4);
  EXPECT_EQ(apply_patch(img, {4, 2}, 4, read_patch(img, {4, 2}, 4)), img);
}

TEST(ApplyPatchTest, ChangesExactlyThePatchBytes) {
  const Image img(16, 16, 3, std::uint8_t{255});
  const Image out = apply_patch(img, {3, 5}, 8, PatchBytes(8 * 8 * 3, 0));
  std::size_t changed = 0;
  for (std::size_t i = 0; i < img.bytes().size(); ++i) {
    changed += img.bytes()[i] != out.bytes()[i];
  }
  EXPECT_EQ(changed, 8u * 8u * 3u);
}

TEST(ApplyPatchTest, DisjointAppliesCommute) {
  const Image img = random_image(16, 16, 1, 5);
  const PatchBytes a(16, 10), b(16, 200);
  const Image ab = apply_patch(apply_patch(img, {0, 0}, 4, a), {8, 8}, 4, b);
  const Image ba = apply_patch(apply_patch(img, {8, 8}, 4, b), {0, 0}, 4, a);
  EXPECT_EQ(ab, ba);
}

TEST(ApplyPatchTest, ReadBackIsBitExact) {
  const Image img = random_image(9, 9, 3, 6);
  const Image patch_src = random_image(3, 3, 3, 7);
  const PatchBytes values(patch_src.bytes().begin(), patch_src.bytes().end());
  EXPECT_EQ(read_patch(apply_patch(img, {6, 1}, 3, values), {6, 1}, 3), values);
}

TEST(ApplyPatchTest, RejectsWrongSize) {
  const Image img(8, 8, 1);
  try {
    apply_patch(img, {0, 0}, 4, PatchBytes(15, 0));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
  }
}

TEST(AccumulateTest, ExactTilingGivesBlocks) {
  const PatchGrid g = build_patch_grid(4, 4, 2, 2);
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const auto m = accumulate_patch_values<double>(g, v, 4, 4);
  EXPECT_EQ(m(0, 0), 1.0);
  EXPECT_EQ(m(1, 3), 2.0);
  EXPECT_EQ(m(3, 0), 3.0);
  EXPECT_EQ(m(2, 2), 4.0);
  EXPECT_EQ(m.sum(), 4.0 * (1 + 2 + 3 + 4));
}

TEST(AccumulateTest, OverlapAverages) {
  const PatchGrid g = build_patch_grid(1, 3, 1, 1);
  ASSERT_EQ(g.size(), 3u);
  const PatchGrid overlap = build_patch_grid(2, 3, 2, 1);
  ASSERT_EQ(overlap.size(), 2u);
  const std::vector<double> v{1.0, 3.0};
  const auto m = accumulate_patch_values<double>(overlap, v, 2, 3);
  EXPECT_EQ(m(0, 0), 1.0);
  EXPECT_EQ(m(1, 1), 2.0);
  EXPECT_EQ(m(0, 2), 3.0);
}

TEST(AccumulateTest, ZerosStayZero) {
  const PatchGrid g = build_patch_grid(10, 10, 4, 3);
  const std::vector<double> v(g.size(), 0.0);
  EXPECT_TRUE(accumulate_patch_values<double>(g, v, 10, 10).isZero(0.0));
}

TEST(AccumulateTest, WorksForFloat) {
  const PatchGrid g = build_patch_grid(4, 4, 4, 4);
  const std::vector<float> v{0.5f};
  const MapValues<float> m = accumulate_patch_values<float>(g, v, 4, 4);
  EXPECT_EQ(m.sum(), 8.0f);
}

TEST(ImageTest, RejectsBadChannels) {
  EXPECT_THROW(Image(2, 2, 2), Error);
  EXPECT_THROW(Image(2, 2, 1, std::vector<std::uint8_t>(3)), Error);
}

}  // namespace
}  // namespace infoattr
