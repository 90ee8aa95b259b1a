#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "eaaw/tensor.hpp"

namespace eaaw {

// Named parameters with parallel gradient slots. Declaration order is kept
// for deterministic serialization and traversal.
struct ParamStore {
  std::vector<std::string> order;
  std::map<std::string, Tensor> params;
  std::map<std::string, Tensor> grads;

  Tensor& add(const std::string& name, Tensor init);
  Tensor& param(const std::string& name);
  const Tensor& param(const std::string& name) const;
  Tensor& grad(const std::string& name);
  const Tensor& grad(const std::string& name) const;
  void zero_grads();
  long total_size() const;
};

enum class OpKind {
  kInput,
  kParam,
  kDense,
  kRelu,
  kEmbedding,
  kSoftmaxCE,
  kSoftmaxProb,
  kAdd,
  kMul,
  kCwiseMax,
  kScale,
};

// Reverse-mode tape over a closed primitive set. Nodes are appended in
// forward order, so the list is topologically sorted by construction and a
// single reverse sweep visits each node exactly once.
class Tape {
 public:
  using NodeId = int;

  explicit Tape(ParamStore& store) : store_(&store) {}

  NodeId input(Tensor value);
  NodeId param(const std::string& name);
  // out[i] = sum_j weight[i][j] * x[j] + bias[i]
  NodeId dense(NodeId x, NodeId weight, NodeId bias);
  NodeId relu(NodeId x);
  // Rows of `table` (shape [vocab, dim]) gathered by `ids`, flattened.
  NodeId embedding(NodeId table, const std::vector<int>& ids);
  // Scalar loss -log softmax(logits)[label]; stable via max-shift.
  NodeId softmax_cross_entropy(NodeId logits, int label);
  // Scalar softmax(logits)[label].
  NodeId softmax_prob(NodeId logits, int label);
  NodeId add(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId cwise_max(NodeId a, NodeId b);
  NodeId scale(NodeId a, double s);

  const Tensor& value(NodeId id) const;
  const Vec& probs(NodeId ce_or_prob_node) const;

  // Accumulates gradients of sum_i coeff_i * node_i into the ParamStore.
  void backward(const std::vector<std::pair<NodeId, double>>& seeds);
  void backward(NodeId node, double seed = 1.0);

  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    OpKind op;
    NodeId a = -1, b = -1, c = -1;
    std::string pname;
    std::vector<int> ids;
    int label = -1;
    double factor = 0.0;
    Tensor value;
    Vec probs;  // cached softmax for CE / prob nodes
    Vec grad;
  };

  NodeId push(Node n);
  Node& at(NodeId id);
  const Node& at(NodeId id) const;

  ParamStore* store_;
  std::vector<Node> nodes_;
};

// Numerically stable softmax cross-entropy used by both the tape and the
// pure prediction path. Returns (loss, probs).
std::pair<double, Vec> softmax_cross_entropy(const Vec& logits, int label);
Vec softmax(const Vec& logits);

enum class OptKind { kSgd, kAdam };

struct OptConfig {
  OptKind kind = OptKind::kSgd;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptState {
  long t = 0;
  std::map<std::string, Vec> m;
  std::map<std::string, Vec> v;
};

void optimizer_step(ParamStore& store, const OptConfig& cfg, OptState& state);

}  // namespace eaaw
