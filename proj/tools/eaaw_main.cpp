// eaaw: end-to-end driver for explanation-watermark experiments.
//
// Subcommands: gen-data, train, embed, extract, verify, attack, ablate,
// report. Every command is a pure function of its declared file inputs:
// identical config + seed reproduce byte-identical artifacts.
//
// Exit codes: 0 success (a failed verification is a result, not an error),
// 1 usage/config/input-file error, 2 runtime/numerical error.

#include <CLI11.hpp>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "eaaw/attacks.hpp"
#include "eaaw/embedding.hpp"
#include "eaaw/rng.hpp"
#include "eaaw/verification.hpp"

namespace fs = std::filesystem;
using namespace eaaw;

namespace {

constexpr const char* kToolVersion = "eaaw 1.0.0";

// ---------------------------------------------------------------------------
// Flat key=value experiment config. '#' starts a comment; keys unknown to
// the running command are rejected; path values resolve relative to the
// config file's directory.
// ---------------------------------------------------------------------------

class Config {
 public:
  static Config load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    Config cfg;
    cfg.dir_ = fs::absolute(fs::path(path)).parent_path();
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
      ++lineno;
      std::string s = strip(line.substr(0, line.find('#')));
      if (s.empty()) continue;
      auto eq = s.find('=');
      if (eq == std::string::npos)
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": expected key=value, got '" + s + "'");
      std::string key = strip(s.substr(0, eq));
      std::string val = strip(s.substr(eq + 1));
      if (key.empty())
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": empty key");
      if (!cfg.kv_.emplace(key, val).second)
        throw ConfigError("config: duplicate key '" + key + "'");
    }
    return cfg;
  }

  static Config empty() {
    Config cfg;
    cfg.dir_ = fs::current_path();
    return cfg;
  }

  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  void set(const std::string& key, const std::string& val) { kv_[key] = val; }

  std::string str(const std::string& key, const std::string& dflt) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? dflt : it->second;
  }

  std::string require(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw ConfigError("config: missing key '" + key + "'");
    return it->second;
  }

  long integer(const std::string& key, long dflt) const {
    return has(key) ? parse_long(key, kv_.at(key)) : dflt;
  }

  double real(const std::string& key, double dflt) const {
    return has(key) ? parse_double(key, kv_.at(key)) : dflt;
  }

  std::uint64_t uint(const std::string& key, std::uint64_t dflt) const {
    if (!has(key)) return dflt;
    long v = parse_long(key, kv_.at(key));
    if (v < 0) throw ConfigError("config: key '" + key + "' must be >= 0");
    return static_cast<std::uint64_t>(v);
  }

  bool flag(const std::string& key, bool dflt) const {
    if (!has(key)) return dflt;
    const std::string& v = kv_.at(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config: key '" + key + "' must be true or false");
  }

  // Path value resolved relative to the config file's directory.
  std::string path(const std::string& key) const { return resolve(require(key)); }

  std::string resolve(const std::string& rel) const {
    fs::path p(rel);
    return (p.is_absolute() ? p : dir_ / p).string();
  }

  std::vector<std::string> list(const std::string& key) const {
    std::vector<std::string> out;
    std::stringstream ss(require(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = strip(item);
      if (!item.empty()) out.push_back(item);
    }
    if (out.empty()) throw ConfigError("config: key '" + key + "' is empty");
    return out;
  }

  std::vector<int> int_list(const std::string& key,
                            std::vector<int> dflt) const {
    if (!has(key)) return dflt;
    std::vector<int> out;
    for (const auto& s : list(key))
      out.push_back(static_cast<int>(parse_long(key, s)));
    return out;
  }

  // Rejects any key absent from `allowed`.
  void check_known(const std::set<std::string>& allowed) const {
    for (const auto& [key, _] : kv_)
      if (!allowed.count(key))
        throw ConfigError("config: unknown key '" + key + "'");
  }

 private:
  static std::string strip(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  static long parse_long(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    long out = 0;
    try {
      out = std::stol(v, &used);
    } catch (const std::exception&) {
      used = std::string::npos;
    }
    if (used != v.size())
      throw ConfigError("config: key '" + key + "' is not an integer: '" + v +
                        "'");
    return out;
  }

  static double parse_double(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double out = 0;
    try {
      out = std::stod(v, &used);
    } catch (const std::exception&) {
      used = std::string::npos;
    }
    if (used != v.size())
      throw ConfigError("config: key '" + key + "' is not a number: '" + v +
                        "'");
    return out;
  }

  std::map<std::string, std::string> kv_;
  fs::path dir_;
};

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

std::uint64_t fnv1a_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char c;
  while (f.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct RunManifest {
  std::string command;
  std::string config_path;  // empty when no config was given
  std::uint64_t seed = 0;
  std::vector<std::string> artifacts;

  void write(const fs::path& out_dir) const {
    std::ofstream f(out_dir / "manifest.txt");
    if (!f) throw FormatError("cannot write manifest in " + out_dir.string());
    f << "version=" << kToolVersion << "\n";
    f << "command=" << command << "\n";
    f << "config_hash=" << std::hex
      << (config_path.empty() ? 0 : fnv1a_file(config_path)) << std::dec
      << "\n";
    f << "seed=" << seed << "\n";
    for (const auto& a : artifacts) f << "artifact=" << a << "\n";
  }
};

fs::path ensure_out_dir(const std::string& out) {
  fs::path dir(out);
  fs::create_directories(dir);
  return dir;
}

OptConfig parse_opt(const Config& cfg, double dflt_lr,
                    const std::string& dflt_kind) {
  std::string kind = cfg.str("optimizer", dflt_kind);
  OptConfig opt;
  if (kind == "sgd")
    opt.kind = OptKind::kSgd;
  else if (kind == "adam")
    opt.kind = OptKind::kAdam;
  else
    throw ConfigError("config: optimizer must be sgd or adam");
  opt.lr = cfg.real("lr", dflt_lr);
  return opt;
}

MaskScheme parse_scheme(const Config& cfg) {
  std::string s = cfg.str("mask_scheme", "loo");
  if (s == "loo") return MaskScheme::kLeaveOneOut;
  if (s == "random") return MaskScheme::kRandom;
  throw ConfigError("config: mask_scheme must be loo or random");
}

WmLossKind parse_loss(const std::string& s) {
  if (s == "hinge") return WmLossKind::kHinge;
  if (s == "ce") return WmLossKind::kCe;
  if (s == "mse") return WmLossKind::kMse;
  throw ConfigError("config: wm_loss must be hinge, ce, or mse");
}

MetricMode parse_mode(const Config& cfg) {
  std::string s = cfg.str("mode", "logits");
  if (s == "logits") return MetricMode::kLogits;
  if (s == "label_only") return MetricMode::kLabelOnly;
  throw ConfigError("config: mode must be logits or label_only");
}

int resolve_c(int c, int k, MaskScheme scheme) {
  if (c != 0) return c;
  return scheme == MaskScheme::kLeaveOneOut ? k : kLabelOnlyMaskFactor * k;
}

TriggerSample gen_noise_trigger(int len, int label, std::uint64_t seed) {
  Rng rng(seed);
  TriggerSample t;
  t.backend = Backend::kClassifier;
  t.input = Tensor({len});
  for (int i = 0; i < len; ++i) t.input[i] = kBlobBackground + rng.normal();
  t.label = label;
  return t;
}

TriggerSample gen_token_trigger(int len, int vocab, std::uint64_t seed) {
  Rng rng(seed);
  TriggerSample t;
  t.backend = Backend::kCausalLm;
  for (int i = 0; i < len; ++i)
    t.tokens.push_back(1 + rng.uniform_int(vocab - 1));
  // target every position in the trailing quarter
  for (int p = std::max(1, len - len / 4); p < len; ++p)
    t.target_positions.push_back(p);
  return t;
}

// Triggers from `trigger` (comma list of files) or synthesized from
// trigger_* keys.
std::vector<TriggerSample> resolve_triggers(const Config& cfg, Backend backend,
                                            int input_len, int vocab,
                                            std::uint64_t seed) {
  std::vector<TriggerSample> triggers;
  if (cfg.has("trigger")) {
    for (const auto& rel : cfg.list("trigger"))
      triggers.push_back(load_trigger(cfg.resolve(rel)));
    return triggers;
  }
  int n = static_cast<int>(cfg.integer("n_triggers", 1));
  if (n < 1) throw ConfigError("config: n_triggers must be >= 1");
  int label = static_cast<int>(cfg.integer("trigger_label", 0));
  std::uint64_t tseed = cfg.uint("trigger_seed", seed + 1000);
  for (int i = 0; i < n; ++i) {
    if (backend == Backend::kClassifier)
      triggers.push_back(gen_noise_trigger(input_len, label, tseed + i));
    else
      triggers.push_back(gen_token_trigger(input_len, vocab, tseed + i));
  }
  return triggers;
}

void write_verify_csv(const fs::path& path, const VerificationReport& r) {
  std::ofstream f(path);
  if (!f) throw FormatError("cannot open for write: " + path.string());
  f << VerificationReport::csv_header() << "\n" << r.csv_row() << "\n";
}

// ---------------------------------------------------------------------------
// gen-data
// ---------------------------------------------------------------------------

int cmd_gen_data(const Config& cfg, const std::string& out,
                 std::uint64_t seed) {
  cfg.check_known({"seed", "kind", "classes", "per_class", "heldout_per_class",
                   "test_per_class", "side", "sigma", "vocab", "n_seqs",
                   "heldout_seqs", "seq_len", "rows", "cols"});
  fs::path dir = ensure_out_dir(out);
  RunManifest mf{"gen-data", "", seed, {}};
  std::string kind = cfg.str("kind", "blobs");
  if (kind == "blobs") {
    int classes = static_cast<int>(cfg.integer("classes", 10));
    int side = static_cast<int>(cfg.integer("side", 16));
    double sigma = cfg.real("sigma", 0.35);
    struct Split {
      const char* name;
      long per_class;
      std::uint64_t seed;
    };
    const Split splits[] = {
        {"blobs.train.bin", cfg.integer("per_class", 200), seed},
        {"blobs.heldout.bin", cfg.integer("heldout_per_class", 50), seed + 1},
        {"blobs.test.bin", cfg.integer("test_per_class", 50), seed + 2},
    };
    for (const auto& s : splits) {
      if (s.per_class <= 0) continue;
      ClassifierDataset ds = gen_blobs(classes, static_cast<int>(s.per_class),
                                       side, sigma, s.seed);
      std::string p = (dir / s.name).string();
      save_classifier_dataset(p, ds);
      mf.artifacts.push_back(p);
      std::cout << p << ": " << ds.size() << " samples, " << classes
                << " classes, " << side * side << " features\n";
    }
  } else if (kind == "token_corpus") {
    int vocab = static_cast<int>(cfg.integer("vocab", 64));
    int seq_len = static_cast<int>(cfg.integer("seq_len", 24));
    struct Split {
      const char* name;
      long n;
      std::uint64_t seed;
    };
    const Split splits[] = {
        {"corpus.train.bin", cfg.integer("n_seqs", 200), seed},
        {"corpus.heldout.bin", cfg.integer("heldout_seqs", 40), seed + 1},
    };
    for (const auto& s : splits) {
      if (s.n <= 0) continue;
      TokenDataset ds =
          gen_token_corpus(vocab, static_cast<int>(s.n), seq_len, s.seed);
      std::string p = (dir / s.name).string();
      save_token_dataset(p, ds);
      mf.artifacts.push_back(p);
      std::cout << p << ": " << ds.size() << " sequences, vocab " << vocab
                << "\n";
    }
  } else if (kind == "glyph_grid") {
    int rows = static_cast<int>(cfg.integer("rows", 8));
    int cols = static_cast<int>(cfg.integer("cols", 8));
    auto grid = gen_glyph_bitmap(rows, cols, seed);
    std::string bp = (dir / "glyph.txt").string();
    save_watermark_bitmap(bp, grid);
    std::string wp = (dir / "watermark.txt").string();
    save_watermark(wp, bitmap_to_watermark(grid));
    mf.artifacts = {bp, wp};
    std::cout << bp << ": " << rows << "x" << cols << " glyph bitmap\n";
  } else {
    throw ConfigError("config: kind must be blobs, token_corpus, or glyph_grid");
  }
  mf.write(dir);
  return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

int cmd_train(const Config& cfg, const std::string& out, std::uint64_t seed) {
  cfg.check_known({"seed", "backend", "data", "hidden", "epochs", "optimizer",
                   "lr", "batch", "context", "embed_dim"});
  fs::path dir = ensure_out_dir(out);
  std::string backend = cfg.str("backend", "classifier");
  TrainConfig tc;
  tc.epochs = static_cast<int>(cfg.integer("epochs", 12));
  tc.opt = parse_opt(cfg, 1e-3, "adam");
  tc.batch = static_cast<int>(cfg.integer("batch", 64));
  tc.seed = seed;

  Model model;
  double quality = 0.0;
  if (backend == "classifier") {
    ClassifierDataset ds = load_classifier_dataset(cfg.path("data"));
    if (ds.size() == 0) throw DataError("train: empty dataset");
    ModelSpec spec =
        ModelSpec::classifier(static_cast<int>(ds.x[0].size()),
                              cfg.int_list("hidden", {32}), ds.classes);
    model = train(spec, ds, tc);
    quality = accuracy(model, ds);
  } else if (backend == "causal_lm") {
    TokenDataset ds = load_token_dataset(cfg.path("data"));
    ModelSpec spec = ModelSpec::causal_lm(
        ds.vocab, static_cast<int>(cfg.integer("context", 8)),
        static_cast<int>(cfg.integer("embed_dim", 8)),
        cfg.int_list("hidden", {32}));
    model = train(spec, ds, tc);
    quality = lm_mean_target_prob(model, ds);
  } else {
    throw ConfigError("config: backend must be classifier or causal_lm");
  }
  std::string mp = (dir / "model.bin").string();
  model.save(mp);
  {
    std::ofstream f(dir / "train.csv");
    f << "backend,epochs,train_quality\n";
    f.precision(12);
    f << backend << "," << tc.epochs << "," << quality << "\n";
  }
  std::cout << mp << ": trained " << backend << ", train quality " << quality
            << "\n";
  RunManifest mf{"train", "", seed, {mp, (dir / "train.csv").string()}};
  mf.write(dir);
  return 0;
}

// ---------------------------------------------------------------------------
// embed
// ---------------------------------------------------------------------------

EmbedConfig embed_config_from(const Config& cfg, std::uint64_t seed) {
  EmbedConfig ec;
  ec.r1 = cfg.real("r1", ec.r1);
  ec.epsilon = cfg.real("epsilon", ec.epsilon);
  ec.loss = parse_loss(cfg.str("wm_loss", "hinge"));
  ec.epochs = static_cast<int>(cfg.integer("epochs", ec.epochs));
  ec.opt = parse_opt(cfg, 1e-3, "adam");
  ec.lambda = cfg.real("lambda", ec.lambda);
  ec.scheme = parse_scheme(cfg);
  ec.c = static_cast<int>(cfg.integer("c", 0));
  ec.batch = static_cast<int>(cfg.integer("batch", ec.batch));
  ec.seed = seed;
  ec.mask_seed = cfg.uint("mask_seed", seed);
  ec.early_stop = cfg.flag("early_stop", true);
  return ec;
}

const std::set<std::string> kEmbedKeys = {
    "seed",       "model",        "data",          "watermark", "k",
    "wm_seed",    "trigger",      "n_triggers",    "trigger_label",
    "trigger_seed", "trigger_len", "r1",           "epsilon",   "wm_loss",
    "epochs",     "optimizer",    "lr",            "lambda",    "mask_scheme",
    "c",          "batch",        "mask_seed",     "early_stop", "alpha"};

int cmd_embed(const Config& cfg, const std::string& out, std::uint64_t seed) {
  cfg.check_known(kEmbedKeys);
  fs::path dir = ensure_out_dir(out);
  Model model = Model::load(cfg.path("model"));

  Watermark wm;
  if (cfg.has("watermark")) {
    wm = load_watermark(cfg.path("watermark"));
  } else {
    int k = static_cast<int>(cfg.integer("k", 64));
    wm = random_watermark(k, cfg.uint("wm_seed", seed));
  }

  EmbedConfig ec = embed_config_from(cfg, seed);
  EmbedResult res;
  std::vector<TriggerSample> triggers;
  double pre_quality = 0.0, post_quality = 0.0;
  if (model.spec().backend == Backend::kClassifier) {
    ClassifierDataset benign = load_classifier_dataset(cfg.path("data"));
    triggers = resolve_triggers(
        cfg, Backend::kClassifier, model.spec().input_dim, 0, seed);
    pre_quality = accuracy(model, benign);
    res = embed_watermark(model, benign, triggers, wm, ec);
    post_quality = accuracy(res.model, benign);
  } else {
    TokenDataset benign = load_token_dataset(cfg.path("data"));
    int tlen = static_cast<int>(cfg.integer("trigger_len", 32));
    triggers = resolve_triggers(cfg, Backend::kCausalLm, tlen,
                                model.spec().vocab, seed);
    pre_quality = lm_mean_target_prob(model, benign);
    res = embed_watermark(model, benign, triggers, wm, ec);
    post_quality = lm_mean_target_prob(res.model, benign);
  }

  RunManifest mf{"embed", "", seed, {}};
  std::string mp = (dir / "model_wm.bin").string();
  res.model.save(mp);
  mf.artifacts.push_back(mp);
  std::string wp = (dir / "watermark.txt").string();
  save_watermark(wp, wm);
  mf.artifacts.push_back(wp);
  for (std::size_t i = 0; i < triggers.size(); ++i) {
    std::string tp =
        (dir / ("trigger_" + std::to_string(i) + ".bin")).string();
    save_trigger(tp, triggers[i]);
    mf.artifacts.push_back(tp);
  }
  std::string hp = (dir / "history.csv").string();
  write_history_csv(hp, res.history);
  mf.artifacts.push_back(hp);

  VerificationReport vr =
      verify(res.model, triggers[0], res.masks, res.partition, wm,
             cfg.real("alpha", kDefaultAlpha), MetricMode::kLogits, ec.lambda);
  std::string vp = (dir / "verify.csv").string();
  write_verify_csv(vp, vr);
  mf.artifacts.push_back(vp);
  mf.write(dir);
  std::cout << vr.text_block();
  std::cout << "benign quality " << pre_quality << " -> " << post_quality
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// extract / verify
// ---------------------------------------------------------------------------

const std::set<std::string> kKeyMaterial = {
    "seed", "model", "trigger", "watermark", "k",     "mask_scheme",
    "c",    "mask_seed", "lambda", "mode",   "alpha", "data"};

struct KeyMaterial {
  TriggerSample trigger;
  MaskSet masks;
  BasicPartition part;
  double lambda = kDefaultRidgeLambda;
  MetricMode mode = MetricMode::kLogits;
};

KeyMaterial load_key_material(const Config& cfg, int k, std::uint64_t seed) {
  KeyMaterial km;
  km.trigger = load_trigger(cfg.path("trigger"));
  MaskScheme scheme = parse_scheme(cfg);
  int c = resolve_c(static_cast<int>(cfg.integer("c", 0)), k, scheme);
  km.masks = generate_masks(c, k, scheme, cfg.uint("mask_seed", seed));
  km.part = segment_input(trigger_input_len(km.trigger), k);
  km.lambda = cfg.real("lambda", kDefaultRidgeLambda);
  km.mode = parse_mode(cfg);
  return km;
}

int cmd_extract(const Config& cfg, const std::string& out, std::uint64_t seed) {
  cfg.check_known(kKeyMaterial);
  fs::path dir = ensure_out_dir(out);
  Model model = Model::load(cfg.path("model"));
  int k = cfg.has("watermark")
              ? load_watermark(cfg.path("watermark")).k()
              : static_cast<int>(cfg.integer("k", 64));
  KeyMaterial km = load_key_material(cfg, k, seed);
  Watermark got = extract_watermark(model, km.trigger, km.masks, km.part,
                                    km.mode, km.lambda);
  std::string ep = (dir / "extracted.txt").string();
  save_watermark(ep, got);
  std::cout << ep << ": " << got.k() << " bits\n";
  RunManifest mf{"extract", "", seed, {ep}};
  mf.write(dir);
  return 0;
}

int cmd_verify(const Config& cfg, const std::string& out, std::uint64_t seed) {
  cfg.check_known(kKeyMaterial);
  fs::path dir = ensure_out_dir(out);
  Model model = Model::load(cfg.path("model"));
  Watermark wm = load_watermark(cfg.path("watermark"));
  KeyMaterial km = load_key_material(cfg, wm.k(), seed);
  VerificationReport r =
      verify(model, km.trigger, km.masks, km.part, wm,
             cfg.real("alpha", kDefaultAlpha), km.mode, km.lambda);
  std::string vp = (dir / "verify.csv").string();
  write_verify_csv(vp, r);
  std::cout << r.text_block();
  if (cfg.has("data")) {
    ClassifierDataset test = load_classifier_dataset(cfg.path("data"));
    std::cout << "benign accuracy " << accuracy(model, test) << "\n";
  }
  RunManifest mf{"verify", "", seed, {vp}};
  mf.write(dir);
  return 0;  // a negative decision is still a successful run
}

// ---------------------------------------------------------------------------
// attack
// ---------------------------------------------------------------------------

int cmd_attack(const Config& cfg, const std::string& out, std::uint64_t seed) {
  std::set<std::string> keys = kEmbedKeys;
  keys.insert({"attack", "attack_epochs", "attack_lr", "rate", "per_layer",
               "tau", "h", "unlearn_r1", "adv_seed"});
  cfg.check_known(keys);
  fs::path dir = ensure_out_dir(out);
  Model model = Model::load(cfg.path("model"));
  Watermark wm = load_watermark(cfg.path("watermark"));

  WatermarkProbe probe;
  probe.trigger = load_trigger(cfg.path("trigger"));
  MaskScheme scheme = parse_scheme(cfg);
  int c = resolve_c(static_cast<int>(cfg.integer("c", 0)), wm.k(), scheme);
  probe.masks = generate_masks(c, wm.k(), scheme, cfg.uint("mask_seed", seed));
  probe.part = segment_input(trigger_input_len(probe.trigger), wm.k());
  probe.original = wm;

  ClassifierDataset data;
  TokenDataset data_lm;
  bool is_lm = model.spec().backend == Backend::kCausalLm;
  if (cfg.has("data")) {
    if (is_lm) {
      data_lm = load_token_dataset(cfg.path("data"));
      probe.benign_eval_lm = &data_lm;
    } else {
      data = load_classifier_dataset(cfg.path("data"));
      probe.benign_eval = &data;
    }
  }

  std::string kind = cfg.require("attack");
  AttackTrace trace;
  Model attacked;
  RunManifest mf{"attack", "", seed, {}};

  if (kind == "finetune") {
    int epochs = static_cast<int>(cfg.integer("attack_epochs", 20));
    double lr = cfg.real("attack_lr", 0.01);
    attacked = is_lm ? finetune_attack(model, data_lm, epochs, lr, seed,
                                       &probe, &trace)
                     : finetune_attack(model, data, epochs, lr, seed, &probe,
                                       &trace);
  } else if (kind == "prune") {
    trace.push_back(probe_point(model, probe, 0));
    attacked = prune_attack(model, cfg.real("rate", 0.4),
                            cfg.flag("per_layer", false));
    trace.push_back(probe_point(attacked, probe, 1));
  } else if (kind == "overwrite") {
    std::uint64_t adv_seed = cfg.uint("adv_seed", seed + 5000);
    TriggerSample adv_trigger = gen_noise_trigger(
        trigger_input_len(probe.trigger),
        static_cast<int>(cfg.integer("trigger_label", 1)), adv_seed);
    Watermark adv_wm = random_watermark(wm.k(), adv_seed);
    EmbedConfig ec = embed_config_from(cfg, adv_seed);
    ec.mask_seed = cfg.uint("mask_seed", seed) + 5000;  // adversary's own key
    trace.push_back(probe_point(model, probe, 0));
    OverwriteResult res =
        overwrite_attack(model, data, adv_trigger, adv_wm, ec, &probe);
    attacked = std::move(res.model);
    trace.push_back(probe_point(attacked, probe, 1));
    std::ofstream f(dir / "overwrite.csv");
    f << "original_wsr,original_log10_p,adversary_wsr\n";
    f.precision(12);
    f << res.original_wsr << "," << res.original_log10_p << ","
      << res.adversary_wsr << "\n";
    mf.artifacts.push_back((dir / "overwrite.csv").string());
  } else if (kind == "unlearn") {
    TriggerSample guess_trigger = gen_noise_trigger(
        trigger_input_len(probe.trigger), 0, cfg.uint("adv_seed", seed + 5000));
    Watermark guess =
        random_watermark(wm.k(), cfg.uint("adv_seed", seed + 5000));
    EmbedConfig base = embed_config_from(cfg, seed);
    attacked = unlearn_attack(model, data, guess, guess_trigger,
                              cfg.real("unlearn_r1", 1.0),
                              static_cast<int>(cfg.integer("attack_epochs", 10)),
                              base, &probe, &trace);
  } else if (kind == "input_mask") {
    double tau = cfg.real("tau", 0.1);
    int h = static_cast<int>(cfg.integer("h", 1));
    MaskedAverageModel wrapped(model, probe.part, h, tau, seed);
    trace.push_back(probe_point(model, probe, 0));
    trace.push_back(probe_point(wrapped, probe, 1));
    attacked = model;  // the defense wraps; the weights are untouched
    std::ofstream f(dir / "input_mask.csv");
    f << "tau,h,wsr,log10_p,benign_acc,benign_acc_drop\n";
    f.precision(12);
    double drop = trace[0].benign_acc - trace[1].benign_acc;
    f << tau << "," << h << "," << trace[1].wsr << "," << trace[1].log10_p
      << "," << trace[1].benign_acc << "," << drop << "\n";
    mf.artifacts.push_back((dir / "input_mask.csv").string());
  } else {
    throw ConfigError(
        "config: attack must be finetune, prune, overwrite, unlearn, or "
        "input_mask");
  }

  std::string mp = (dir / "model_attacked.bin").string();
  attacked.save(mp);
  mf.artifacts.push_back(mp);
  std::string tp = (dir / "attack_trace.csv").string();
  write_attack_trace_csv(tp, trace);
  mf.artifacts.push_back(tp);
  VerificationReport r = make_report(
      extract_watermark(attacked, probe.trigger, probe.masks, probe.part,
                        MetricMode::kLogits, cfg.real("lambda", 1.0)),
      wm, cfg.real("alpha", kDefaultAlpha));
  std::string vp = (dir / "verify.csv").string();
  write_verify_csv(vp, r);
  mf.artifacts.push_back(vp);
  mf.write(dir);
  std::cout << "attack " << kind << " done\n" << r.text_block();
  return 0;
}

// ---------------------------------------------------------------------------
// ablate
// ---------------------------------------------------------------------------

int cmd_ablate(const Config& cfg, const std::string& out, std::uint64_t seed) {
  std::set<std::string> keys = kEmbedKeys;
  keys.insert({"sweep", "values"});
  cfg.check_known(keys);
  fs::path dir = ensure_out_dir(out);
  Model model = Model::load(cfg.path("model"));
  if (model.spec().backend != Backend::kClassifier)
    throw ConfigError("ablate: classifier backend only");
  ClassifierDataset benign = load_classifier_dataset(cfg.path("data"));
  Watermark wm;
  if (cfg.has("watermark"))
    wm = load_watermark(cfg.path("watermark"));
  else
    wm = random_watermark(static_cast<int>(cfg.integer("k", 64)),
                          cfg.uint("wm_seed", seed));

  std::string sweep = cfg.require("sweep");
  std::vector<std::string> values = cfg.list("values");
  EmbedConfig base = embed_config_from(cfg, seed);
  if (sweep == "c") base.scheme = MaskScheme::kRandom;

  struct Row {
    std::string value;
    double wsr = 0.0, log10_p = 0.0, benign_acc = 0.0;
    int epochs = 0;
  };
  std::vector<Row> rows(values.size());

  auto run_point = [&](std::size_t i) {
    EmbedConfig ec = base;
    int n_triggers = static_cast<int>(cfg.integer("n_triggers", 1));
    const std::string& v = values[i];
    if (sweep == "r1")
      ec.r1 = std::stod(v);
    else if (sweep == "c")
      ec.c = std::stoi(v);
    else if (sweep == "epsilon")
      ec.epsilon = std::stod(v);
    else if (sweep == "loss")
      ec.loss = parse_loss(v);
    else if (sweep == "triggers")
      n_triggers = std::stoi(v);
    else
      throw ConfigError(
          "config: sweep must be r1, c, epsilon, loss, or triggers");
    std::vector<TriggerSample> triggers;
    std::uint64_t tseed = cfg.uint("trigger_seed", seed + 1000);
    for (int t = 0; t < n_triggers; ++t)
      triggers.push_back(gen_noise_trigger(
          model.spec().input_dim,
          static_cast<int>(cfg.integer("trigger_label", 0)), tseed + t));
    EmbedResult res = embed_watermark(model, benign, triggers, wm, ec);
    VerificationReport r = verify(res.model, triggers[0], res.masks,
                                  res.partition, wm, kDefaultAlpha,
                                  MetricMode::kLogits, ec.lambda);
    rows[i] = Row{values[i], r.wsr, r.log10_p, accuracy(res.model, benign),
                  static_cast<int>(res.history.size())};
  };

  int threads = 1;
  if (const char* env = std::getenv("EAAW_THREADS")) {
    threads = std::max(1, std::atoi(env));
  }
  threads = std::min<int>(threads, static_cast<int>(values.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < values.size(); ++i) run_point(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < values.size();
             i = next.fetch_add(1))
          run_point(i);
      });
    for (auto& th : pool) th.join();
  }

  std::string ap = (dir / ("ablate_" + sweep + ".csv")).string();
  std::ofstream f(ap);
  f << "value,wsr,log10_p,benign_acc,epochs\n";
  f.precision(12);
  for (const auto& r : rows)
    f << r.value << "," << r.wsr << "," << r.log10_p << "," << r.benign_acc
      << "," << r.epochs << "\n";
  std::cout << ap << ": " << rows.size() << " sweep points (" << sweep
            << ")\n";
  RunManifest mf{"ablate", "", seed, {ap}};
  mf.write(dir);
  return 0;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

int cmd_report(const std::string& out) {
  fs::path dir(out);
  if (!fs::is_directory(dir))
    throw ConfigError("report: not a directory: " + out);
  struct Row {
    std::string run;
    std::string acc;  // blank when the run recorded no benign accuracy
    double log10_p = 0.0, wsr = 0.0;
  };
  std::vector<Row> rows;
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() == "verify.csv")
      files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& p : files) {
    std::ifstream f(p);
    std::string header, line;
    std::getline(f, header);
    if (header != VerificationReport::csv_header())
      throw FormatError("report: bad header in " + p.string() + " line 1");
    if (!std::getline(f, line))
      throw FormatError("report: missing row in " + p.string() + " line 2");
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
    if (cols.size() != 6)
      throw FormatError("report: bad row in " + p.string() + " line 2");
    Row r;
    r.run = fs::relative(p.parent_path(), dir).string();
    r.wsr = std::stod(cols[1]);
    r.log10_p = std::stod(cols[3]);
    // adjacent history.csv supplies the benign quality when present
    fs::path hist = p.parent_path() / "history.csv";
    if (fs::exists(hist)) {
      std::ifstream hf(hist);
      std::string last, l;
      std::getline(hf, l);  // header
      while (std::getline(hf, l))
        if (!l.empty()) last = l;
      auto pos = last.rfind(',');
      if (pos != std::string::npos) r.acc = last.substr(pos + 1);
    }
    rows.push_back(r);
  }
  std::ofstream f(dir / "summary.csv");
  f << "run,acc,log10_p,wsr\n";
  f.precision(12);
  double wsr_sum = 0.0;
  for (const auto& r : rows) {
    f << r.run << "," << r.acc << "," << r.log10_p << "," << r.wsr << "\n";
    wsr_sum += r.wsr;
  }
  if (!rows.empty())
    f << "mean,," << 0.0 << "," << wsr_sum / static_cast<double>(rows.size())
      << "\n";
  std::cout << (dir / "summary.csv").string() << ": " << rows.size()
            << " runs\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"explanation-watermark experiment driver"};
  app.require_subcommand(1);

  struct Common {
    std::string config, out = ".";
    long seed = -1;  // -1: use the config's seed key (default 0)
  };
  std::map<std::string, Common> opts;
  const char* names[] = {"gen-data", "train",  "embed",  "extract",
                         "verify",   "attack", "ablate", "report"};
  for (const char* n : names) {
    CLI::App* sub = app.add_subcommand(n);
    Common& c = opts[n];
    sub->add_option("--config", c.config, "experiment config file");
    sub->add_option("--seed", c.seed, "seed override");
    sub->add_option("--out", c.out, "output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  const std::string cmd = app.get_subcommands()[0]->get_name();
  const Common& c = opts[cmd];
  try {
    Config cfg = c.config.empty() ? Config::empty() : Config::load(c.config);
    std::uint64_t seed =
        c.seed >= 0 ? static_cast<std::uint64_t>(c.seed) : cfg.uint("seed", 0);
    int rc = 0;
    if (cmd == "gen-data")
      rc = cmd_gen_data(cfg, c.out, seed);
    else if (cmd == "train")
      rc = cmd_train(cfg, c.out, seed);
    else if (cmd == "embed")
      rc = cmd_embed(cfg, c.out, seed);
    else if (cmd == "extract")
      rc = cmd_extract(cfg, c.out, seed);
    else if (cmd == "verify")
      rc = cmd_verify(cfg, c.out, seed);
    else if (cmd == "attack")
      rc = cmd_attack(cfg, c.out, seed);
    else if (cmd == "ablate")
      rc = cmd_ablate(cfg, c.out, seed);
    else if (cmd == "report")
      rc = cmd_report(c.out);
    return rc;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
