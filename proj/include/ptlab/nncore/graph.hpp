#pragma once

#include "ptlab/nncore/param_set.hpp"
#include "ptlab/nncore/tensor.hpp"

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace ptlab::nncore {

/// Handle to a node inside a Graph.
struct NodeId {
  std::size_t index = 0;
};

/// Eagerly evaluated computation tape with reverse-mode differentiation.
///
/// Every op computes its forward value immediately and, when any input
/// depends on a trainable parameter, records a closure that propagates the
/// output gradient to its inputs. Parameters are borrowed from the ParamSet
/// passed at construction, which must outlive the graph.
///
/// The op inventory is deliberately small: exactly what the text encoder,
/// denoiser, autoencoder and oracle need.
template <typename T>
class Graph {
 public:
  using TensorT = BasicTensor<T>;
  using Grads = std::map<std::string, TensorT>;

  /// With track_grads=false every parameter is treated as frozen (inference).
  explicit Graph(const BasicParamSet<T>& params, bool track_grads = true)
      : params_(params), track_grads_(track_grads) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  NodeId param(const std::string& name);
  NodeId input(TensorT value);

  const TensorT& value(NodeId id) const;
  bool requires_grad(NodeId id) const { return nodes_.at(id.index).requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// [m,k] x [k,n]
  NodeId matmul(NodeId a, NodeId b);
  /// x[m,k] * w[k,n] + b[n]
  NodeId linear(NodeId x, NodeId w, NodeId b);
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId scale(NodeId a, T factor);
  NodeId silu(NodeId x);
  NodeId softmax_rows(NodeId x);
  /// Per-row normalization followed by elementwise affine (gamma, beta).
  NodeId layer_norm(NodeId x, NodeId gamma, NodeId beta, T eps = T(1e-5));
  NodeId gather_rows(NodeId table, std::span<const std::size_t> rows);
  /// Row means over consecutive segments; offsets has one more entry than segments.
  NodeId segment_mean(NodeId x, std::span<const std::size_t> offsets);
  NodeId concat_cols(std::span<const NodeId> parts);
  NodeId slice_rows(NodeId x, std::size_t begin, std::size_t end);
  /// sum((a - b)^2) / rows(a): per-row squared L2 distance averaged over rows.
  NodeId squared_error(NodeId a, NodeId b);
  /// Mean softmax cross-entropy of row logits against integer labels.
  NodeId cross_entropy(NodeId logits, std::span<const std::size_t> labels);
  NodeId sum(NodeId x);
  NodeId mean(NodeId x);

  /// Gradients of a one-element node w.r.t. every trainable parameter of the
  /// borrowed ParamSet (zeros for parameters the graph never touched).
  Grads backward(NodeId loss);

 private:
  struct Node {
    TensorT owned;
    const TensorT* borrowed = nullptr;
    TensorT grad;
    bool has_grad = false;
    bool requires_grad = false;
    const char* op = "";
    std::function<void()> backprop;
  };

  NodeId push(const char* op, TensorT value, bool requires_grad);
  bool any_requires_grad(std::initializer_list<NodeId> ids) const;
  TensorT& grad(NodeId id);
  const TensorT& grad_value(NodeId id) const { return nodes_[id.index].grad; }

  const BasicParamSet<T>& params_;
  bool track_grads_ = true;
  std::vector<Node> nodes_;
  std::map<std::string, NodeId> param_nodes_;
};

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace ptlab::nncore
