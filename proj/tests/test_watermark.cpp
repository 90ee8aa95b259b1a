#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "eaaw/dataset.hpp"
#include "eaaw/watermark.hpp"

using namespace eaaw;

namespace {

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("watermark validation") {
  Watermark wm;
  wm.bits = {1, -1, 1, 1, -1, 1, -1, 1};
  CHECK_NOTHROW(wm.validate());
  wm.bits[3] = 0;
  CHECK_THROWS_AS(wm.validate(), CodecError);
  wm.bits = {1, 1, 1, 1, 1, 1, 1, 1};  // single-signed
  CHECK_THROWS_AS(wm.validate(), CodecError);
  wm.bits = {1, -1, 1, -1};  // too short
  CHECK_THROWS_AS(wm.validate(), CodecError);
}

TEST_CASE("random watermark properties") {
  Watermark a = random_watermark(64, 1);
  Watermark b = random_watermark(64, 1);
  Watermark c = random_watermark(64, 2);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  CHECK_NOTHROW(a.validate());
  CHECK_THROWS_AS(random_watermark(4, 1), CodecError);
  // roughly balanced
  int pos = 0;
  for (int bit : a.bits) pos += bit == 1;
  CHECK(pos > 16);
  CHECK(pos < 48);
}

TEST_CASE("bitmap round trip") {
  auto grid = gen_glyph_bitmap(8, 8, 3);
  Watermark wm = bitmap_to_watermark(grid);
  CHECK(wm.k() == 64);
  CHECK(watermark_to_bitmap(wm, 8, 8) == grid);
  CHECK_THROWS_AS(watermark_to_bitmap(wm, 7, 8), DimensionError);
  CHECK_THROWS_AS(bitmap_to_watermark({}), CodecError);
  CHECK_THROWS_AS(bitmap_to_watermark({{1, 0}, {1}}), CodecError);
  CHECK_THROWS_AS(bitmap_to_watermark({{1, 2, 0, 1, 0, 1, 0, 1}}), CodecError);
}

TEST_CASE("input segmentation") {
  BasicPartition p = segment_input(256, 64);
  CHECK(p.part_size == 4);
  CHECK(p.part_begin(0) == 0);
  CHECK(p.part_end(0) == 4);
  CHECK(p.part_begin(63) == 252);
  CHECK(p.ignored_begin() == 256);
  // trailing remainder is ignored
  BasicPartition q = segment_input(10, 3);
  CHECK(q.part_size == 3);
  CHECK(q.ignored_begin() == 9);
  CHECK_THROWS_AS(segment_input(4, 8), ConfigError);
  CHECK_THROWS_AS(segment_input(4, 0), ConfigError);
}

TEST_CASE("leave-one-out masks") {
  MaskSet ms = generate_masks(8, 8, MaskScheme::kLeaveOneOut, 0);
  CHECK(ms.c() == 8);
  CHECK(ms.k() == 8);
  for (int i = 0; i < 8; ++i) {
    CHECK(ms.masks(i, i) == 0.0);
    CHECK(ms.masks.row(i).sum() == 7.0);
  }
  CHECK_THROWS_AS(generate_masks(7, 8, MaskScheme::kLeaveOneOut, 0),
                  ConfigError);
}

TEST_CASE("random masks") {
  MaskSet ms = generate_masks(200, 16, MaskScheme::kRandom, 5);
  MaskSet same = generate_masks(200, 16, MaskScheme::kRandom, 5);
  MaskSet other = generate_masks(200, 16, MaskScheme::kRandom, 6);
  CHECK(ms.masks == same.masks);
  CHECK(ms.masks != other.masks);
  for (int i = 0; i < ms.c(); ++i) {
    double s = ms.masks.row(i).sum();
    CHECK(s > 0.0);
    CHECK(s < 16.0);
    for (int j = 0; j < 16; ++j) {
      bool binary = ms.masks(i, j) == 0.0 || ms.masks(i, j) == 1.0;
      CHECK(binary);
    }
  }
  CHECK_THROWS_AS(generate_masks(0, 16, MaskScheme::kRandom, 0), ConfigError);
}

TEST_CASE("feature masking semantics") {
  BasicPartition p = segment_input(10, 3);
  Tensor x({10});
  for (int i = 0; i < 10; ++i) x[i] = i + 1.0;
  Vec mask(3);
  mask << 1.0, 0.0, 1.0;
  Tensor masked = apply_mask(x, mask, p);
  for (int i = 0; i < 3; ++i) CHECK(masked[i] == x[i]);
  for (int i = 3; i < 6; ++i) CHECK(masked[i] == 0.0);
  for (int i = 6; i < 9; ++i) CHECK(masked[i] == x[i]);
  CHECK(masked[9] == x[9]);  // ignored tail untouched

  Vec bad(4);
  CHECK_THROWS_AS(apply_mask(x, bad, p), DimensionError);
  Tensor short_x({7});
  CHECK_THROWS_AS(apply_mask(short_x, mask, p), DimensionError);
}

TEST_CASE("token masking semantics") {
  BasicPartition p = segment_input(7, 3);
  std::vector<int> toks{5, 6, 7, 8, 9, 10, 11};
  Vec mask(3);
  mask << 0.0, 1.0, 0.0;
  auto masked = apply_mask_tokens(toks, mask, p);
  CHECK(masked == std::vector<int>{kUnkToken, kUnkToken, 7, 8, kUnkToken,
                                   kUnkToken, 11});
}

TEST_CASE("trigger masking dispatch") {
  BasicPartition p = segment_input(8, 8);
  TriggerSample t;
  t.backend = Backend::kClassifier;
  t.input = Tensor({8});
  t.input.values.setOnes();
  t.label = 2;
  Vec mask = Vec::Ones(8);
  mask[3] = 0.0;
  TriggerSample masked = apply_mask(t, mask, p);
  CHECK(masked.input[3] == 0.0);
  CHECK(masked.input[2] == 1.0);
  CHECK(masked.label == 2);
  CHECK(trigger_input_len(t) == 8);

  TriggerSample lm;
  lm.backend = Backend::kCausalLm;
  lm.tokens = {1, 2, 3, 4, 5, 6, 7, 8};
  CHECK(trigger_input_len(lm) == 8);
  TriggerSample lmm = apply_mask(lm, mask, p);
  CHECK(lmm.tokens[3] == kUnkToken);
  CHECK(lmm.tokens[2] == 3);
}

TEST_CASE("watermark file round trip") {
  std::string path = tmp_path("eaaw_wm_test.txt");
  Watermark wm = random_watermark(32, 9);
  save_watermark(path, wm);
  CHECK(load_watermark(path) == wm);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_watermark(path), FormatError);
}

TEST_CASE("bitmap file round trip") {
  std::string path = tmp_path("eaaw_bitmap_test.txt");
  auto grid = gen_glyph_bitmap(4, 16, 7);
  save_watermark_bitmap(path, grid);
  CHECK(load_watermark_bitmap(path) == grid);
  std::remove(path.c_str());
}

TEST_CASE("trigger file round trip") {
  std::string path = tmp_path("eaaw_trig_test.bin");
  TriggerSample t;
  t.backend = Backend::kClassifier;
  t.input = Tensor({2, 3});
  for (int i = 0; i < 6; ++i) t.input[i] = 0.5 * i - 1.0;
  t.label = 4;
  save_trigger(path, t);
  TriggerSample r = load_trigger(path);
  CHECK(r.backend == Backend::kClassifier);
  CHECK(r.input.shape == t.input.shape);
  CHECK(r.input.values == t.input.values);
  CHECK(r.label == 4);

  TriggerSample lm;
  lm.backend = Backend::kCausalLm;
  lm.tokens = {3, 1, 4, 1, 5};
  lm.target_positions = {2, 4};
  save_trigger(path, lm);
  TriggerSample rlm = load_trigger(path);
  CHECK(rlm.backend == Backend::kCausalLm);
  CHECK(rlm.tokens == lm.tokens);
  CHECK(rlm.target_positions == lm.target_positions);

  // corrupt the magic
  {
    std::FILE* f = std::fopen(path.c_str(), "r+b");
    std::fputc('X', f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(load_trigger(path), FormatError);
  std::remove(path.c_str());
}
