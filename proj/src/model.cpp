#include "eaaw/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "eaaw/io_util.hpp"
#include "eaaw/rng.hpp"

namespace eaaw {

void ModelSpec::validate() const {
  if (hidden.empty()) throw ConfigError("model spec: hidden widths empty");
  for (int h : hidden)
    if (h < 1) throw ConfigError("model spec: hidden width < 1");
  if (backend == Backend::kClassifier) {
    if (input_dim < 1 || classes < 1)
      throw ConfigError("model spec: classifier dims must be >= 1");
  } else {
    if (vocab < 2 || context < 1 || embed_dim < 1)
      throw ConfigError("model spec: LM dims must be >= 1");
  }
}

ModelSpec ModelSpec::classifier(int input_dim, std::vector<int> hidden,
                                int classes) {
  ModelSpec s;
  s.backend = Backend::kClassifier;
  s.input_dim = input_dim;
  s.hidden = std::move(hidden);
  s.classes = classes;
  s.validate();
  return s;
}

ModelSpec ModelSpec::causal_lm(int vocab, int context, int embed_dim,
                               std::vector<int> hidden) {
  ModelSpec s;
  s.backend = Backend::kCausalLm;
  s.vocab = vocab;
  s.context = context;
  s.embed_dim = embed_dim;
  s.hidden = std::move(hidden);
  s.validate();
  return s;
}

namespace {

std::vector<std::pair<int, int>> layer_dims(const ModelSpec& spec) {
  // (out, in) per dense layer
  std::vector<std::pair<int, int>> dims;
  int in = spec.backend == Backend::kClassifier
               ? spec.input_dim
               : spec.context * spec.embed_dim;
  for (int h : spec.hidden) {
    dims.emplace_back(h, in);
    in = h;
  }
  int out = spec.backend == Backend::kClassifier ? spec.classes : spec.vocab;
  dims.emplace_back(out, in);
  return dims;
}

}  // namespace

Model Model::init(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  Model m;
  m.spec_ = spec;
  Rng rng(seed);
  if (spec.backend == Backend::kCausalLm) {
    Tensor emb({spec.vocab, spec.embed_dim});
    for (long i = 0; i < emb.size(); ++i) emb.values[i] = 0.1 * rng.normal();
    m.params_.add("emb", std::move(emb));
  }
  auto dims = layer_dims(spec);
  for (std::size_t l = 0; l < dims.size(); ++l) {
    auto [out, in] = dims[l];
    Tensor w({out, in});
    double std_dev = std::sqrt(2.0 / in);
    for (long i = 0; i < w.size(); ++i) w.values[i] = std_dev * rng.normal();
    m.params_.add("w" + std::to_string(l), std::move(w));
    m.params_.add("b" + std::to_string(l), Tensor({out}));
  }
  return m;
}

Vec Model::classifier_logits(const Vec& x) const {
  if (x.size() != spec_.input_dim)
    throw DimensionError("predict: input size does not match spec");
  Vec h = x;
  auto dims = layer_dims(spec_);
  for (std::size_t l = 0; l < dims.size(); ++l) {
    const Tensor& w = params_.param("w" + std::to_string(l));
    const Tensor& b = params_.param("b" + std::to_string(l));
    h = w.matrix() * h + b.values;
    if (l + 1 < dims.size()) h = h.cwiseMax(0.0);
  }
  return h;
}

PredictOutput Model::predict(const Tensor& input) const {
  if (spec_.backend != Backend::kClassifier)
    throw StateError("predict() requires a classifier backend");
  Vec probs = softmax(classifier_logits(input.values));
  PredictOutput out;
  int best = 0;
  probs.maxCoeff(&best);
  // ties broken by lowest index
  for (int i = 0; i < probs.size(); ++i) {
    if (probs[i] == probs[best] && i < best) best = i;
  }
  out.predicted = best;
  out.probs = Tensor::from_vec(std::move(probs));
  return out;
}

std::vector<PredictOutput> Model::predict_batch(
    const std::vector<Tensor>& inputs) const {
  std::vector<PredictOutput> out;
  out.reserve(inputs.size());
  for (const auto& x : inputs) out.push_back(predict(x));
  return out;
}

std::vector<int> Model::context_window(const std::vector<int>& tokens,
                                       int pos) const {
  std::vector<int> ctx(spec_.context, kUnkToken);
  for (int i = 0; i < spec_.context; ++i) {
    int src = pos - spec_.context + i;
    if (src >= 0) ctx[i] = tokens[src];
  }
  return ctx;
}

Vec Model::lm_next_probs(const std::vector<int>& context) const {
  if (spec_.backend != Backend::kCausalLm)
    throw StateError("lm_next_probs() requires a causal LM backend");
  if (static_cast<int>(context.size()) != spec_.context)
    throw DimensionError("context length does not match spec");
  const Tensor& emb = params_.param("emb");
  Vec h(spec_.context * spec_.embed_dim);
  for (int i = 0; i < spec_.context; ++i) {
    int id = context[i];
    if (id < 0 || id >= spec_.vocab) throw IndexError("token id out of range");
    h.segment(static_cast<long>(i) * spec_.embed_dim, spec_.embed_dim) =
        emb.matrix().row(id).transpose();
  }
  auto dims = layer_dims(spec_);
  for (std::size_t l = 0; l < dims.size(); ++l) {
    const Tensor& w = params_.param("w" + std::to_string(l));
    const Tensor& b = params_.param("b" + std::to_string(l));
    h = w.matrix() * h + b.values;
    if (l + 1 < dims.size()) h = h.cwiseMax(0.0);
  }
  return softmax(h);
}

std::vector<double> Model::lm_target_probs(
    const std::vector<int>& tokens, const std::vector<int>& positions) const {
  std::vector<double> out;
  out.reserve(positions.size());
  for (int pos : positions) {
    if (pos < 1 || pos >= static_cast<int>(tokens.size()))
      throw IndexError("target position out of range (must be >= 1)");
    Vec probs = lm_next_probs(context_window(tokens, pos));
    out.push_back(probs[tokens[pos]]);
  }
  return out;
}

Tape::NodeId Model::forward_logits(Tape& tape, Tape::NodeId input) const {
  if (spec_.backend != Backend::kClassifier)
    throw StateError("forward_logits() requires a classifier backend");
  Tape::NodeId h = input;
  auto dims = layer_dims(spec_);
  for (std::size_t l = 0; l < dims.size(); ++l) {
    Tape::NodeId w = tape.param("w" + std::to_string(l));
    Tape::NodeId b = tape.param("b" + std::to_string(l));
    h = tape.dense(h, w, b);
    if (l + 1 < dims.size()) h = tape.relu(h);
  }
  return h;
}

Tape::NodeId Model::forward_logits_lm(Tape& tape,
                                      const std::vector<int>& context) const {
  if (spec_.backend != Backend::kCausalLm)
    throw StateError("forward_logits_lm() requires a causal LM backend");
  if (static_cast<int>(context.size()) != spec_.context)
    throw DimensionError("context length does not match spec");
  Tape::NodeId emb = tape.param("emb");
  Tape::NodeId h = tape.embedding(emb, context);
  auto dims = layer_dims(spec_);
  for (std::size_t l = 0; l < dims.size(); ++l) {
    Tape::NodeId w = tape.param("w" + std::to_string(l));
    Tape::NodeId b = tape.param("b" + std::to_string(l));
    h = tape.dense(h, w, b);
    if (l + 1 < dims.size()) h = tape.relu(h);
  }
  return h;
}

// ---------------------------------------------------------------------------
// Serialization
//
// magic "EAAW" | u8 version=1 | u8 backend tag | spec block (LE u32) |
// parameters in declaration order as LE f64 | u64 checksum.
// Spec block, classifier: input_dim, classes, n_hidden, hidden...
// Spec block, LM: vocab, context, embed_dim, n_hidden, hidden...
// Checksum: sum of all parameter bytes mod 2^64.
// ---------------------------------------------------------------------------

namespace {
constexpr char kModelMagic[4] = {'E', 'A', 'A', 'W'};
constexpr std::uint8_t kModelVersion = 1;

std::uint64_t bytes_checksum(const std::uint8_t* data, std::size_t n,
                             std::uint64_t acc) {
  for (std::size_t i = 0; i < n; ++i) acc += data[i];
  return acc;
}
}  // namespace

void Model::save(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open for write: " + path);
  f.write(kModelMagic, 4);
  io::write_u8(f, kModelVersion);
  io::write_u8(f, static_cast<std::uint8_t>(spec_.backend));
  if (spec_.backend == Backend::kClassifier) {
    io::write_u32(f, static_cast<std::uint32_t>(spec_.input_dim));
    io::write_u32(f, static_cast<std::uint32_t>(spec_.classes));
  } else {
    io::write_u32(f, static_cast<std::uint32_t>(spec_.vocab));
    io::write_u32(f, static_cast<std::uint32_t>(spec_.context));
    io::write_u32(f, static_cast<std::uint32_t>(spec_.embed_dim));
  }
  io::write_u32(f, static_cast<std::uint32_t>(spec_.hidden.size()));
  for (int h : spec_.hidden) io::write_u32(f, static_cast<std::uint32_t>(h));
  std::uint64_t checksum = 0;
  for (const auto& name : params_.order) {
    const Tensor& p = params_.param(name);
    for (long i = 0; i < p.size(); ++i) {
      double d = p.values[i];
      std::uint8_t b[8];
      std::memcpy(b, &d, 8);
      checksum = bytes_checksum(b, 8, checksum);
      io::write_f64(f, d);
    }
  }
  io::write_u64(f, checksum);
  if (!f) throw FormatError("write failed: " + path);
}

Model Model::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open: " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kModelMagic, 4) != 0)
    throw FormatError("bad model magic", 0);
  std::uint8_t version = io::read_u8(f);
  if (version != kModelVersion)
    throw FormatError("unsupported model format version " +
                          std::to_string(version),
                      4);
  std::uint8_t tag = io::read_u8(f);
  ModelSpec spec;
  if (tag == 0) {
    spec.backend = Backend::kClassifier;
    spec.input_dim = static_cast<int>(io::read_u32(f));
    spec.classes = static_cast<int>(io::read_u32(f));
  } else if (tag == 1) {
    spec.backend = Backend::kCausalLm;
    spec.vocab = static_cast<int>(io::read_u32(f));
    spec.context = static_cast<int>(io::read_u32(f));
    spec.embed_dim = static_cast<int>(io::read_u32(f));
  } else {
    throw FormatError("unknown backend tag " + std::to_string(tag), 5);
  }
  std::uint32_t n_hidden = io::read_u32(f);
  for (std::uint32_t i = 0; i < n_hidden; ++i)
    spec.hidden.push_back(static_cast<int>(io::read_u32(f)));
  spec.validate();
  Model m = Model::init(spec, 0);
  std::uint64_t checksum = 0;
  for (const auto& name : m.params_.order) {
    Tensor& p = m.params_.param(name);
    for (long i = 0; i < p.size(); ++i) {
      double d = io::read_f64(f);
      std::uint8_t b[8];
      std::memcpy(b, &d, 8);
      checksum = bytes_checksum(b, 8, checksum);
      p.values[i] = d;
    }
  }
  std::uint64_t stored = io::read_u64(f);
  if (stored != checksum)
    throw FormatError("model checksum mismatch",
                      static_cast<long>(f.tellg()) - 8);
  return m;
}

bool models_equal(const Model& a, const Model& b) {
  if (!(a.spec() == b.spec())) return false;
  for (const auto& name : a.params().order) {
    const Vec& pa = a.params().param(name).values;
    const Vec& pb = b.params().param(name).values;
    if (pa.size() != pb.size()) return false;
    if (std::memcmp(pa.data(), pb.data(), sizeof(double) * pa.size()) != 0)
      return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

void train_inplace(Model& model, const ClassifierDataset& data,
                   const TrainConfig& cfg) {
  if (data.size() == 0) throw DataError("training dataset is empty");
  for (int label : data.y)
    if (label < 0 || label >= model.spec().classes)
      throw DataError("training label out of range");
  Rng rng(cfg.seed);
  OptState opt_state;
  std::vector<int> idx(data.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(idx);
    for (std::size_t start = 0; start < idx.size();
         start += static_cast<std::size_t>(cfg.batch)) {
      std::size_t end = std::min(idx.size(), start + cfg.batch);
      Tape tape(model.params());
      Tape::NodeId loss = -1;
      for (std::size_t i = start; i < end; ++i) {
        Tape::NodeId logits =
            model.forward_logits(tape, tape.input(data.x[idx[i]]));
        Tape::NodeId ce = tape.softmax_cross_entropy(logits, data.y[idx[i]]);
        loss = loss < 0 ? ce : tape.add(loss, ce);
      }
      loss = tape.scale(loss, 1.0 / static_cast<double>(end - start));
      if (!std::isfinite(tape.value(loss).values[0]))
        throw NumericError("training loss diverged (non-finite)");
      model.params().zero_grads();
      tape.backward(loss);
      optimizer_step(model.params(), cfg.opt, opt_state);
    }
  }
}

void train_inplace(Model& model, const TokenDataset& data,
                   const TrainConfig& cfg) {
  if (data.size() == 0) throw DataError("training corpus is empty");
  Rng rng(cfg.seed);
  OptState opt_state;
  // (sequence, position) pairs; every position >= 1 is a target
  std::vector<std::pair<int, int>> items;
  for (std::size_t s = 0; s < data.seqs.size(); ++s) {
    for (std::size_t t = 1; t < data.seqs[s].size(); ++t) {
      int tok = data.seqs[s][t];
      if (tok < 0 || tok >= model.spec().vocab)
        throw DataError("token id out of range");
      items.emplace_back(static_cast<int>(s), static_cast<int>(t));
    }
  }
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(items);
    for (std::size_t start = 0; start < items.size();
         start += static_cast<std::size_t>(cfg.batch)) {
      std::size_t end = std::min(items.size(), start + cfg.batch);
      Tape tape(model.params());
      Tape::NodeId loss = -1;
      for (std::size_t i = start; i < end; ++i) {
        const auto& [s, t] = items[i];
        Tape::NodeId logits = model.forward_logits_lm(
            tape, model.context_window(data.seqs[s], t));
        Tape::NodeId ce = tape.softmax_cross_entropy(logits, data.seqs[s][t]);
        loss = loss < 0 ? ce : tape.add(loss, ce);
      }
      loss = tape.scale(loss, 1.0 / static_cast<double>(end - start));
      if (!std::isfinite(tape.value(loss).values[0]))
        throw NumericError("training loss diverged (non-finite)");
      model.params().zero_grads();
      tape.backward(loss);
      optimizer_step(model.params(), cfg.opt, opt_state);
    }
  }
}

Model train(const ModelSpec& spec, const ClassifierDataset& data,
            const TrainConfig& cfg) {
  Model m = Model::init(spec, cfg.seed);
  train_inplace(m, data, cfg);
  return m;
}

Model train(const ModelSpec& spec, const TokenDataset& data,
            const TrainConfig& cfg) {
  Model m = Model::init(spec, cfg.seed);
  train_inplace(m, data, cfg);
  return m;
}

double accuracy(const BlackBox& model, const ClassifierDataset& data) {
  if (data.size() == 0) throw DataError("accuracy: empty dataset");
  auto outs = model.predict_batch(data.x);
  long correct = 0;
  for (std::size_t i = 0; i < outs.size(); ++i)
    if (outs[i].predicted == data.y[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

double lm_mean_target_prob(const Model& model, const TokenDataset& data) {
  if (data.size() == 0) throw DataError("empty corpus");
  double sum = 0.0;
  long n = 0;
  for (const auto& seq : data.seqs) {
    std::vector<int> positions;
    for (std::size_t t = 1; t < seq.size(); ++t)
      positions.push_back(static_cast<int>(t));
    for (double p : model.lm_target_probs(seq, positions)) {
      sum += p;
      ++n;
    }
  }
  return sum / static_cast<double>(n);
}

}  // namespace eaaw
