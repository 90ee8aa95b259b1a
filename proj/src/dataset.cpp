#include "eaaw/dataset.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "eaaw/error.hpp"
#include "eaaw/io_util.hpp"

namespace eaaw {

ClassifierDataset gen_blobs(int classes, int per_class, int side, double sigma,
                            std::uint64_t seed, double background) {
  if (classes < 1 || per_class < 1 || side < 4)
    throw ConfigError("gen_blobs: invalid parameters");
  ClassifierDataset ds;
  ds.classes = classes;
  Rng rng(seed);
  const double radius = side / 3.0;
  const double bump_r = 1.8;
  for (int c = 0; c < classes; ++c) {
    double angle = 2.0 * std::numbers::pi * c / classes;
    double cy = side / 2.0 + radius * std::sin(angle);
    double cx = side / 2.0 + radius * std::cos(angle);
    for (int s = 0; s < per_class; ++s) {
      Tensor img({side, side});
      for (int r = 0; r < side; ++r) {
        for (int col = 0; col < side; ++col) {
          double d2 = (r - cy) * (r - cy) + (col - cx) * (col - cx);
          double v = std::exp(-d2 / (2.0 * bump_r * bump_r));
          img.values[r * side + col] = background + v + sigma * rng.normal();
        }
      }
      ds.x.push_back(std::move(img));
      ds.y.push_back(c);
    }
  }
  // interleave classes deterministically
  std::vector<int> idx(ds.x.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  rng.shuffle(idx);
  ClassifierDataset out;
  out.classes = classes;
  for (int i : idx) {
    out.x.push_back(ds.x[i]);
    out.y.push_back(ds.y[i]);
  }
  return out;
}

TokenDataset gen_token_corpus(int vocab, int n_seqs, int seq_len,
                              std::uint64_t seed) {
  if (vocab < 3 || n_seqs < 1 || seq_len < 2)
    throw ConfigError("gen_token_corpus: invalid parameters");
  TokenDataset ds;
  ds.vocab = vocab;
  Rng rng(seed);
  // Sparse Markov chain: each token has a handful of likely successors.
  int usable = vocab - 1;  // token 0 reserved for <unk>
  std::vector<std::vector<int>> succ(vocab);
  for (int t = 1; t < vocab; ++t) {
    for (int j = 0; j < 4; ++j) succ[t].push_back(1 + rng.uniform_int(usable));
  }
  for (int s = 0; s < n_seqs; ++s) {
    std::vector<int> seq;
    int cur = 1 + rng.uniform_int(usable);
    seq.push_back(cur);
    for (int t = 1; t < seq_len; ++t) {
      if (rng.uniform() < 0.85)
        cur = succ[cur][rng.uniform_int(static_cast<int>(succ[cur].size()))];
      else
        cur = 1 + rng.uniform_int(usable);
      seq.push_back(cur);
    }
    ds.seqs.push_back(std::move(seq));
  }
  return ds;
}

std::vector<std::vector<int>> gen_glyph_bitmap(int rows, int cols,
                                               std::uint64_t seed) {
  if (rows < 2 || cols < 2) throw ConfigError("glyph bitmap too small");
  Rng rng(seed);
  std::vector<std::vector<int>> grid(rows, std::vector<int>(cols, 0));
  // vertical strokes plus speckle, glyph-like enough to carry both values
  for (int c = 0; c < cols; c += 3) {
    for (int r = 0; r < rows; ++r) grid[r][c] = 1;
  }
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (rng.uniform() < 0.2) grid[r][c] ^= 1;
  // force both values present
  grid[0][0] = 0;
  grid[rows - 1][cols - 1] = 1;
  return grid;
}

namespace {
constexpr char kDsMagic[4] = {'E', 'A', 'D', 'S'};
constexpr std::uint8_t kDsVersion = 1;
}  // namespace

void save_classifier_dataset(const std::string& path,
                             const ClassifierDataset& ds) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open for write: " + path);
  f.write(kDsMagic, 4);
  io::write_u8(f, kDsVersion);
  io::write_u8(f, 0);  // classifier tag
  io::write_u32(f, static_cast<std::uint32_t>(ds.classes));
  io::write_u32(f, static_cast<std::uint32_t>(ds.x.size()));
  std::uint32_t dim = ds.x.empty() ? 0 : static_cast<std::uint32_t>(ds.x[0].size());
  io::write_u32(f, dim);
  for (std::size_t i = 0; i < ds.x.size(); ++i) {
    io::write_u32(f, static_cast<std::uint32_t>(ds.y[i]));
    for (long j = 0; j < ds.x[i].size(); ++j) io::write_f64(f, ds.x[i][j]);
  }
}

ClassifierDataset load_classifier_dataset(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open: " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kDsMagic, 4) != 0)
    throw FormatError("bad dataset magic", 0);
  if (io::read_u8(f) != kDsVersion) throw FormatError("dataset version mismatch", 4);
  if (io::read_u8(f) != 0) throw FormatError("not a classifier dataset", 5);
  ClassifierDataset ds;
  ds.classes = static_cast<int>(io::read_u32(f));
  std::uint32_t n = io::read_u32(f);
  std::uint32_t dim = io::read_u32(f);
  for (std::uint32_t i = 0; i < n; ++i) {
    ds.y.push_back(static_cast<int>(io::read_u32(f)));
    Tensor t({static_cast<int>(dim)});
    for (std::uint32_t j = 0; j < dim; ++j) t.values[j] = io::read_f64(f);
    ds.x.push_back(std::move(t));
  }
  if (!f) throw FormatError("truncated dataset file", static_cast<long>(f.tellg()));
  return ds;
}

void save_token_dataset(const std::string& path, const TokenDataset& ds) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open for write: " + path);
  f.write(kDsMagic, 4);
  io::write_u8(f, kDsVersion);
  io::write_u8(f, 1);  // token tag
  io::write_u32(f, static_cast<std::uint32_t>(ds.vocab));
  io::write_u32(f, static_cast<std::uint32_t>(ds.seqs.size()));
  for (const auto& s : ds.seqs) {
    io::write_u32(f, static_cast<std::uint32_t>(s.size()));
    for (int t : s) io::write_u32(f, static_cast<std::uint32_t>(t));
  }
}

TokenDataset load_token_dataset(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open: " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kDsMagic, 4) != 0)
    throw FormatError("bad dataset magic", 0);
  if (io::read_u8(f) != kDsVersion) throw FormatError("dataset version mismatch", 4);
  if (io::read_u8(f) != 1) throw FormatError("not a token dataset", 5);
  TokenDataset ds;
  ds.vocab = static_cast<int>(io::read_u32(f));
  std::uint32_t n = io::read_u32(f);
  for (std::uint32_t i = 0; i < n; ++i) {
    std::uint32_t len = io::read_u32(f);
    std::vector<int> s(len);
    for (std::uint32_t j = 0; j < len; ++j) s[j] = static_cast<int>(io::read_u32(f));
    ds.seqs.push_back(std::move(s));
  }
  if (!f) throw FormatError("truncated dataset file", static_cast<long>(f.tellg()));
  return ds;
}

}  // namespace eaaw
