#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eaaw/rng.hpp"
#include "eaaw/tensor.hpp"

namespace eaaw {

struct ClassifierDataset {
  std::vector<Tensor> x;
  std::vector<int> y;
  int classes = 0;

  std::size_t size() const { return x.size(); }
};

// Pre-tokenized integer sequences. Token id 0 is reserved for <unk> and
// never appears in generated corpora.
struct TokenDataset {
  std::vector<std::vector<int>> seqs;
  int vocab = 0;

  std::size_t size() const { return seqs.size(); }
};

inline constexpr int kUnkToken = 0;

// Default pixel level under every blob image. A strictly positive floor
// makes zero-masked pixels out-of-distribution "holes", so occlusion
// carries real signal for explanation fitting and masking defenses.
inline constexpr double kBlobBackground = 1.2;

// Synthetic 16x16-style "images": class i carries a Gaussian bump at a
// class-specific location on a constant background, plus i.i.d. noise.
ClassifierDataset gen_blobs(int classes, int per_class, int side, double sigma,
                            std::uint64_t seed,
                            double background = kBlobBackground);

// Seeded first-order Markov source over {1..vocab-1}.
TokenDataset gen_token_corpus(int vocab, int n_seqs, int seq_len,
                              std::uint64_t seed);

// Deterministic pseudo-glyph bitmap with both 0s and 1s present.
std::vector<std::vector<int>> gen_glyph_bitmap(int rows, int cols,
                                               std::uint64_t seed);

// File I/O (versioned binary; see format notes in dataset.cpp).
void save_classifier_dataset(const std::string& path,
                             const ClassifierDataset& ds);
ClassifierDataset load_classifier_dataset(const std::string& path);
void save_token_dataset(const std::string& path, const TokenDataset& ds);
TokenDataset load_token_dataset(const std::string& path);

}  // namespace eaaw
