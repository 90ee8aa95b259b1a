#include "eaaw/watermark.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "eaaw/io_util.hpp"
#include "eaaw/rng.hpp"

namespace eaaw {

void Watermark::validate() const {
  if (k() < 8) throw CodecError("watermark must have k >= 8 bits");
  bool has_pos = false, has_neg = false;
  for (int b : bits) {
    if (b == 1)
      has_pos = true;
    else if (b == -1)
      has_neg = true;
    else
      throw CodecError("watermark entries must be -1 or +1");
  }
  if (!has_pos || !has_neg)
    throw CodecError("watermark must contain both -1 and +1");
}

Watermark bitmap_to_watermark(const std::vector<std::vector<int>>& grid) {
  if (grid.empty() || grid[0].empty()) throw CodecError("empty bitmap");
  Watermark wm;
  for (const auto& row : grid) {
    if (row.size() != grid[0].size()) throw CodecError("ragged bitmap");
    for (int cell : row) {
      if (cell != 0 && cell != 1) throw CodecError("bitmap cell must be 0 or 1");
      wm.bits.push_back(cell == 1 ? 1 : -1);
    }
  }
  wm.validate();
  return wm;
}

std::vector<std::vector<int>> watermark_to_bitmap(const Watermark& wm, int rows,
                                                  int cols) {
  if (rows * cols != wm.k())
    throw DimensionError("bitmap shape does not match watermark length");
  std::vector<std::vector<int>> grid(rows, std::vector<int>(cols));
  for (int i = 0; i < wm.k(); ++i)
    grid[i / cols][i % cols] = wm.bits[i] == 1 ? 1 : 0;
  return grid;
}

Watermark random_watermark(int k, std::uint64_t seed) {
  if (k < 8) throw CodecError("watermark must have k >= 8 bits");
  Rng rng(seed);
  Watermark wm;
  wm.bits.resize(k);
  for (int i = 0; i < k; ++i) wm.bits[i] = rng.bernoulli(0.5) ? 1 : -1;
  // the chi-squared contingency table needs both signs
  wm.bits[0] = 1;
  wm.bits[1] = -1;
  return wm;
}

BasicPartition segment_input(int m, int k) {
  if (k < 1 || k > m)
    throw ConfigError("segment_input: need 1 <= k <= input length");
  BasicPartition p;
  p.input_len = m;
  p.k = k;
  p.part_size = m / k;
  return p;
}

MaskSet generate_masks(int c, int k, MaskScheme scheme, std::uint64_t seed) {
  if (c < 1) throw ConfigError("mask count c must be >= 1");
  MaskSet ms;
  ms.scheme = scheme;
  ms.seed = seed;
  if (scheme == MaskScheme::kLeaveOneOut) {
    if (c != k) throw ConfigError("leave-one-out masks require c == k");
    ms.masks = Mat::Ones(k, k);
    ms.masks.diagonal().setZero();
  } else {
    Rng rng(seed);
    ms.masks = Mat(c, k);
    for (int i = 0; i < c; ++i) {
      for (;;) {
        double sum = 0.0;
        for (int j = 0; j < k; ++j) {
          double bit = rng.bernoulli(0.5) ? 1.0 : 0.0;
          ms.masks(i, j) = bit;
          sum += bit;
        }
        // all-ones carries no occlusion signal; all-zeros destroys the sample
        if (sum > 0.0 && sum < static_cast<double>(k)) break;
      }
    }
  }
  return ms;
}

Tensor apply_mask(const Tensor& x, const Eigen::Ref<const Vec>& mask,
                  const BasicPartition& part) {
  if (x.size() != part.input_len)
    throw DimensionError("apply_mask: input length does not match partition");
  if (mask.size() != part.k)
    throw DimensionError("apply_mask: mask length does not match partition");
  Tensor out = x;
  for (int p = 0; p < part.k; ++p) {
    if (mask[p] == 0.0)
      out.values.segment(part.part_begin(p), part.part_size).setZero();
  }
  return out;
}

std::vector<int> apply_mask_tokens(const std::vector<int>& tokens,
                                   const Eigen::Ref<const Vec>& mask,
                                   const BasicPartition& part) {
  if (static_cast<int>(tokens.size()) != part.input_len)
    throw DimensionError("apply_mask: token count does not match partition");
  if (mask.size() != part.k)
    throw DimensionError("apply_mask: mask length does not match partition");
  std::vector<int> out = tokens;
  for (int p = 0; p < part.k; ++p) {
    if (mask[p] == 0.0) {
      for (int i = part.part_begin(p); i < part.part_end(p); ++i)
        out[i] = kUnkToken;
    }
  }
  return out;
}

TriggerSample apply_mask(const TriggerSample& trigger,
                         const Eigen::Ref<const Vec>& mask,
                         const BasicPartition& part) {
  TriggerSample out = trigger;
  if (trigger.backend == Backend::kClassifier)
    out.input = apply_mask(trigger.input, mask, part);
  else
    out.tokens = apply_mask_tokens(trigger.tokens, mask, part);
  return out;
}

int trigger_input_len(const TriggerSample& trigger) {
  return trigger.backend == Backend::kClassifier
             ? static_cast<int>(trigger.input.size())
             : static_cast<int>(trigger.tokens.size());
}

// --------------------------------------------------------------------------
// Files
// --------------------------------------------------------------------------

void save_watermark(const std::string& path, const Watermark& wm) {
  std::ofstream f(path);
  if (!f) throw FormatError("cannot open for write: " + path);
  f << wm.k() << "\n";
  for (int i = 0; i < wm.k(); ++i) f << (i ? " " : "") << wm.bits[i];
  f << "\n";
}

Watermark load_watermark(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw FormatError("cannot open: " + path);
  int k = 0;
  if (!(f >> k)) throw FormatError("watermark file: missing length line");
  Watermark wm;
  wm.bits.resize(k);
  for (int i = 0; i < k; ++i) {
    if (!(f >> wm.bits[i]))
      throw FormatError("watermark file: expected " + std::to_string(k) +
                        " entries");
  }
  wm.validate();
  return wm;
}

void save_watermark_bitmap(const std::string& path,
                           const std::vector<std::vector<int>>& grid) {
  std::ofstream f(path);
  if (!f) throw FormatError("cannot open for write: " + path);
  for (const auto& row : grid) {
    for (int cell : row) f << cell;
    f << "\n";
  }
}

std::vector<std::vector<int>> load_watermark_bitmap(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw FormatError("cannot open: " + path);
  std::vector<std::vector<int>> grid;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<int> row;
    for (char ch : line) {
      if (ch == '0')
        row.push_back(0);
      else if (ch == '1')
        row.push_back(1);
      else
        throw FormatError("bitmap file: cells must be 0 or 1");
    }
    grid.push_back(std::move(row));
  }
  if (grid.empty()) throw FormatError("bitmap file: empty");
  return grid;
}

namespace {
constexpr char kTrigMagic[4] = {'E', 'A', 'T', 'R'};
constexpr std::uint8_t kTrigVersion = 1;
}  // namespace

void save_trigger(const std::string& path, const TriggerSample& trigger) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open for write: " + path);
  f.write(kTrigMagic, 4);
  io::write_u8(f, kTrigVersion);
  io::write_u8(f, static_cast<std::uint8_t>(trigger.backend));
  if (trigger.backend == Backend::kClassifier) {
    io::write_u32(f, static_cast<std::uint32_t>(trigger.input.shape.size()));
    for (int d : trigger.input.shape)
      io::write_u32(f, static_cast<std::uint32_t>(d));
    for (long i = 0; i < trigger.input.size(); ++i)
      io::write_f64(f, trigger.input[i]);
    io::write_u32(f, static_cast<std::uint32_t>(trigger.label));
  } else {
    io::write_u32(f, static_cast<std::uint32_t>(trigger.tokens.size()));
    for (int t : trigger.tokens) io::write_u32(f, static_cast<std::uint32_t>(t));
    io::write_u32(f, static_cast<std::uint32_t>(trigger.target_positions.size()));
    for (int p : trigger.target_positions)
      io::write_u32(f, static_cast<std::uint32_t>(p));
  }
}

TriggerSample load_trigger(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open: " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kTrigMagic, 4) != 0)
    throw FormatError("bad trigger magic", 0);
  if (io::read_u8(f) != kTrigVersion)
    throw FormatError("trigger version mismatch", 4);
  std::uint8_t tag = io::read_u8(f);
  TriggerSample t;
  if (tag == 0) {
    t.backend = Backend::kClassifier;
    std::uint32_t nd = io::read_u32(f);
    std::vector<int> shape;
    for (std::uint32_t i = 0; i < nd; ++i)
      shape.push_back(static_cast<int>(io::read_u32(f)));
    t.input = Tensor(shape);
    for (long i = 0; i < t.input.size(); ++i) t.input[i] = io::read_f64(f);
    t.label = static_cast<int>(io::read_u32(f));
  } else if (tag == 1) {
    t.backend = Backend::kCausalLm;
    std::uint32_t n = io::read_u32(f);
    t.tokens.resize(n);
    for (std::uint32_t i = 0; i < n; ++i)
      t.tokens[i] = static_cast<int>(io::read_u32(f));
    std::uint32_t np = io::read_u32(f);
    t.target_positions.resize(np);
    for (std::uint32_t i = 0; i < np; ++i)
      t.target_positions[i] = static_cast<int>(io::read_u32(f));
  } else {
    throw FormatError("unknown trigger backend tag", 5);
  }
  return t;
}

}  // namespace eaaw
