#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eaaw/model.hpp"
#include "eaaw/tensor.hpp"

namespace eaaw {

// Length-k sign sequence over {-1, +1}; the secret multi-bit payload.
struct Watermark {
  std::vector<int> bits;

  int k() const { return static_cast<int>(bits.size()); }
  void validate() const;
  bool operator==(const Watermark&) const = default;
};

Watermark bitmap_to_watermark(const std::vector<std::vector<int>>& grid);
std::vector<std::vector<int>> watermark_to_bitmap(const Watermark& wm, int rows,
                                                  int cols);
Watermark random_watermark(int k, std::uint64_t seed);

// k contiguous equal-size index ranges over the flattened input; the
// trailing m mod k indices are ignored.
struct BasicPartition {
  int input_len = 0;
  int k = 0;
  int part_size = 0;

  int part_begin(int part) const { return part * part_size; }
  int part_end(int part) const { return (part + 1) * part_size; }
  int ignored_begin() const { return k * part_size; }
};

BasicPartition segment_input(int m, int k);

enum class MaskScheme : std::uint8_t { kLeaveOneOut = 0, kRandom = 1 };

struct MaskSet {
  Mat masks;  // c x k over {0,1}
  MaskScheme scheme = MaskScheme::kLeaveOneOut;
  std::uint64_t seed = 0;

  int c() const { return static_cast<int>(masks.rows()); }
  int k() const { return static_cast<int>(masks.cols()); }
};

MaskSet generate_masks(int c, int k, MaskScheme scheme, std::uint64_t seed);

// Secret trigger input with its ground-truth label / target positions.
struct TriggerSample {
  Backend backend = Backend::kClassifier;
  // classifier
  Tensor input;
  int label = 0;
  // causal LM
  std::vector<int> tokens;
  std::vector<int> target_positions;
};

// Masking operation: mask bit 1 keeps the basic part, bit 0 occludes it
// (features -> 0.0; tokens -> <unk>). Ignored tail indices are untouched.
Tensor apply_mask(const Tensor& x, const Eigen::Ref<const Vec>& mask,
                  const BasicPartition& part);
std::vector<int> apply_mask_tokens(const std::vector<int>& tokens,
                                   const Eigen::Ref<const Vec>& mask,
                                   const BasicPartition& part);
TriggerSample apply_mask(const TriggerSample& trigger,
                         const Eigen::Ref<const Vec>& mask,
                         const BasicPartition& part);

// Length of the maskable surface of a trigger (features or tokens).
int trigger_input_len(const TriggerSample& trigger);

// File formats.
void save_watermark(const std::string& path, const Watermark& wm);
Watermark load_watermark(const std::string& path);
void save_watermark_bitmap(const std::string& path,
                           const std::vector<std::vector<int>>& grid);
std::vector<std::vector<int>> load_watermark_bitmap(const std::string& path);
void save_trigger(const std::string& path, const TriggerSample& trigger);
TriggerSample load_trigger(const std::string& path);

}  // namespace eaaw
