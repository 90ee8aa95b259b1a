#include "eaaw/autodiff.hpp"

#include <cmath>

namespace eaaw {

Tensor& ParamStore::add(const std::string& name, Tensor init) {
  if (params.count(name)) throw ConfigError("duplicate parameter name: " + name);
  order.push_back(name);
  grads[name] = Tensor(init.shape);
  auto [it, ok] = params.emplace(name, std::move(init));
  (void)ok;
  return it->second;
}

Tensor& ParamStore::param(const std::string& name) {
  auto it = params.find(name);
  if (it == params.end()) throw ConfigError("unknown parameter: " + name);
  return it->second;
}

const Tensor& ParamStore::param(const std::string& name) const {
  auto it = params.find(name);
  if (it == params.end()) throw ConfigError("unknown parameter: " + name);
  return it->second;
}

Tensor& ParamStore::grad(const std::string& name) {
  auto it = grads.find(name);
  if (it == grads.end()) throw ConfigError("unknown parameter: " + name);
  return it->second;
}

const Tensor& ParamStore::grad(const std::string& name) const {
  auto it = grads.find(name);
  if (it == grads.end()) throw ConfigError("unknown parameter: " + name);
  return it->second;
}

void ParamStore::zero_grads() {
  for (auto& [name, g] : grads) g.values.setZero();
}

long ParamStore::total_size() const {
  long n = 0;
  for (const auto& [name, p] : params) n += p.size();
  return n;
}

Vec softmax(const Vec& logits) {
  double mx = logits.maxCoeff();
  Vec e = (logits.array() - mx).exp();
  return e / e.sum();
}

std::pair<double, Vec> softmax_cross_entropy(const Vec& logits, int label) {
  if (label < 0 || label >= logits.size())
    throw IndexError("label out of range");
  double mx = logits.maxCoeff();
  Vec shifted = logits.array() - mx;
  double lse = std::log(shifted.array().exp().sum());
  Vec probs = (shifted.array() - lse).exp();
  double loss = lse - shifted[label];
  return {loss, probs};
}

Tape::NodeId Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

Tape::Node& Tape::at(NodeId id) {
  if (id < 0 || id >= static_cast<NodeId>(nodes_.size()))
    throw StateError("tape node reference out of range");
  return nodes_[id];
}

const Tape::Node& Tape::at(NodeId id) const {
  if (id < 0 || id >= static_cast<NodeId>(nodes_.size()))
    throw StateError("tape node reference out of range");
  return nodes_[id];
}

Tape::NodeId Tape::input(Tensor value) {
  Node n;
  n.op = OpKind::kInput;
  n.value = std::move(value);
  return push(std::move(n));
}

Tape::NodeId Tape::param(const std::string& name) {
  Node n;
  n.op = OpKind::kParam;
  n.pname = name;
  n.value = store_->param(name);
  return push(std::move(n));
}

Tape::NodeId Tape::dense(NodeId x, NodeId weight, NodeId bias) {
  const Tensor& xv = at(x).value;
  const Tensor& wv = at(weight).value;
  const Tensor& bv = at(bias).value;
  if (wv.shape.size() != 2 || wv.cols() != xv.size() || bv.size() != wv.rows())
    throw DimensionError("dense: shapes do not conform");
  Node n;
  n.op = OpKind::kDense;
  n.a = x;
  n.b = weight;
  n.c = bias;
  n.value = Tensor::from_vec(wv.matrix() * xv.values + bv.values);
  return push(std::move(n));
}

Tape::NodeId Tape::relu(NodeId x) {
  Node n;
  n.op = OpKind::kRelu;
  n.a = x;
  n.value = at(x).value;
  n.value.values = n.value.values.cwiseMax(0.0);
  return push(std::move(n));
}

Tape::NodeId Tape::embedding(NodeId table, const std::vector<int>& ids) {
  const Tensor& tv = at(table).value;
  if (tv.shape.size() != 2) throw DimensionError("embedding table must be 2-D");
  int dim = tv.cols();
  Node n;
  n.op = OpKind::kEmbedding;
  n.a = table;
  n.ids = ids;
  n.value = Tensor({static_cast<int>(ids.size()) * dim});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= tv.rows())
      throw IndexError("embedding id out of range");
    n.value.values.segment(static_cast<long>(i) * dim, dim) =
        tv.matrix().row(ids[i]).transpose();
  }
  return push(std::move(n));
}

Tape::NodeId Tape::softmax_cross_entropy(NodeId logits, int label) {
  auto [loss, probs] = eaaw::softmax_cross_entropy(at(logits).value.values, label);
  Node n;
  n.op = OpKind::kSoftmaxCE;
  n.a = logits;
  n.label = label;
  n.probs = std::move(probs);
  n.value = Tensor({1});
  n.value.values[0] = loss;
  return push(std::move(n));
}

Tape::NodeId Tape::softmax_prob(NodeId logits, int label) {
  const Vec& lv = at(logits).value.values;
  if (label < 0 || label >= lv.size()) throw IndexError("label out of range");
  Node n;
  n.op = OpKind::kSoftmaxProb;
  n.a = logits;
  n.label = label;
  n.probs = softmax(lv);
  n.value = Tensor({1});
  n.value.values[0] = n.probs[label];
  return push(std::move(n));
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
  if (at(a).value.size() != at(b).value.size())
    throw DimensionError("add: size mismatch");
  Node n;
  n.op = OpKind::kAdd;
  n.a = a;
  n.b = b;
  n.value = at(a).value;
  n.value.values += at(b).value.values;
  return push(std::move(n));
}

Tape::NodeId Tape::mul(NodeId a, NodeId b) {
  if (at(a).value.size() != at(b).value.size())
    throw DimensionError("mul: size mismatch");
  Node n;
  n.op = OpKind::kMul;
  n.a = a;
  n.b = b;
  n.value = at(a).value;
  n.value.values = n.value.values.cwiseProduct(at(b).value.values);
  return push(std::move(n));
}

Tape::NodeId Tape::cwise_max(NodeId a, NodeId b) {
  if (at(a).value.size() != at(b).value.size())
    throw DimensionError("max: size mismatch");
  Node n;
  n.op = OpKind::kCwiseMax;
  n.a = a;
  n.b = b;
  n.value = at(a).value;
  n.value.values = n.value.values.cwiseMax(at(b).value.values);
  return push(std::move(n));
}

Tape::NodeId Tape::scale(NodeId a, double s) {
  Node n;
  n.op = OpKind::kScale;
  n.a = a;
  n.factor = s;
  n.value = at(a).value;
  n.value.values *= s;
  return push(std::move(n));
}

const Tensor& Tape::value(NodeId id) const { return at(id).value; }

const Vec& Tape::probs(NodeId id) const {
  const Node& n = at(id);
  if (n.op != OpKind::kSoftmaxCE && n.op != OpKind::kSoftmaxProb)
    throw StateError("probs() requires a softmax node");
  return n.probs;
}

void Tape::backward(NodeId node, double seed) {
  backward(std::vector<std::pair<NodeId, double>>{{node, seed}});
}

void Tape::backward(const std::vector<std::pair<NodeId, double>>& seeds) {
  if (nodes_.empty()) throw StateError("backward before forward");
  for (auto& n : nodes_) n.grad = Vec::Zero(n.value.size());
  for (auto [id, coeff] : seeds) {
    Node& n = at(id);
    if (n.value.size() != 1)
      throw StateError("backward seed must be a scalar node");
    n.grad[0] += coeff;
  }
  for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.grad.isZero(0.0)) continue;
    switch (n.op) {
      case OpKind::kInput:
        break;
      case OpKind::kParam:
        store_->grad(n.pname).values += n.grad;
        break;
      case OpKind::kDense: {
        const Tensor& xv = nodes_[n.a].value;
        const Tensor& wv = nodes_[n.b].value;
        nodes_[n.a].grad += wv.matrix().transpose() * n.grad;
        Eigen::Map<RowMat> wg(nodes_[n.b].grad.data(), wv.rows(), wv.cols());
        wg += n.grad * xv.values.transpose();
        nodes_[n.c].grad += n.grad;
        break;
      }
      case OpKind::kRelu: {
        const Vec& xv = nodes_[n.a].value.values;
        nodes_[n.a].grad.array() +=
            n.grad.array() * (xv.array() > 0.0).cast<double>();
        break;
      }
      case OpKind::kEmbedding: {
        const Tensor& tv = nodes_[n.a].value;
        int dim = tv.cols();
        Eigen::Map<RowMat> tg(nodes_[n.a].grad.data(), tv.rows(), tv.cols());
        for (std::size_t i = 0; i < n.ids.size(); ++i)
          tg.row(n.ids[i]) +=
              n.grad.segment(static_cast<long>(i) * dim, dim).transpose();
        break;
      }
      case OpKind::kSoftmaxCE: {
        Vec g = n.probs;
        g[n.label] -= 1.0;
        nodes_[n.a].grad += n.grad[0] * g;
        break;
      }
      case OpKind::kSoftmaxProb: {
        // d p_y / d logit_j = p_y (1[j==y] - p_j)
        double py = n.probs[n.label];
        Vec g = -py * n.probs;
        g[n.label] += py;
        nodes_[n.a].grad += n.grad[0] * g;
        break;
      }
      case OpKind::kAdd:
        nodes_[n.a].grad += n.grad;
        nodes_[n.b].grad += n.grad;
        break;
      case OpKind::kMul:
        nodes_[n.a].grad += n.grad.cwiseProduct(nodes_[n.b].value.values);
        nodes_[n.b].grad += n.grad.cwiseProduct(nodes_[n.a].value.values);
        break;
      case OpKind::kCwiseMax: {
        const Vec& av = nodes_[n.a].value.values;
        const Vec& bv = nodes_[n.b].value.values;
        // ties go to the first operand
        Eigen::ArrayXd pick = (av.array() >= bv.array()).cast<double>();
        nodes_[n.a].grad.array() += n.grad.array() * pick;
        nodes_[n.b].grad.array() += n.grad.array() * (1.0 - pick);
        break;
      }
      case OpKind::kScale:
        nodes_[n.a].grad += n.factor * n.grad;
        break;
    }
  }
}

void optimizer_step(ParamStore& store, const OptConfig& cfg, OptState& state) {
  if (cfg.lr < 0.0) throw ConfigError("learning rate must be non-negative");
  switch (cfg.kind) {
    case OptKind::kSgd:
      for (const auto& name : store.order)
        store.param(name).values -= cfg.lr * store.grad(name).values;
      break;
    case OptKind::kAdam: {
      state.t += 1;
      double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
      double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
      for (const auto& name : store.order) {
        const Vec& g = store.grad(name).values;
        auto mit = state.m.find(name);
        if (mit == state.m.end()) {
          state.m[name] = Vec::Zero(g.size());
          state.v[name] = Vec::Zero(g.size());
        }
        Vec& m = state.m[name];
        Vec& v = state.v[name];
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
        Vec mhat = m / bc1;
        Vec vhat = v / bc2;
        store.param(name).values.array() -=
            cfg.lr * mhat.array() / (vhat.array().sqrt() + cfg.eps);
      }
      break;
    }
  }
}

}  // namespace eaaw
