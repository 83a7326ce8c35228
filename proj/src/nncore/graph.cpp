#include "ptlab/nncore/graph.hpp"

#include <cmath>
#include <stdexcept>

namespace ptlab::nncore {

template <typename T>
NodeId Graph<T>::push(const char* op, TensorT value, bool requires_grad) {
  if (!value.all_finite()) {
    throw NonFiniteError(std::string("non-finite value produced by ") + op);
  }
  Node n;
  n.owned = std::move(value);
  n.requires_grad = requires_grad;
  n.op = op;
  nodes_.push_back(std::move(n));
  return NodeId{nodes_.size() - 1};
}

template <typename T>
bool Graph<T>::any_requires_grad(std::initializer_list<NodeId> ids) const {
  for (NodeId id : ids) {
    if (nodes_.at(id.index).requires_grad) return true;
  }
  return false;
}

template <typename T>
const BasicTensor<T>& Graph<T>::value(NodeId id) const {
  const Node& n = nodes_.at(id.index);
  return n.borrowed ? *n.borrowed : n.owned;
}

template <typename T>
BasicTensor<T>& Graph<T>::grad(NodeId id) {
  Node& n = nodes_[id.index];
  if (!n.has_grad) {
    n.grad = TensorT(value(id).shape());
    n.has_grad = true;
  }
  return n.grad;
}

template <typename T>
NodeId Graph<T>::param(const std::string& name) {
  if (auto it = param_nodes_.find(name); it != param_nodes_.end()) return it->second;
  const TensorT& p = params_.get(name);
  Node n;
  n.borrowed = &p;
  n.requires_grad = track_grads_ && params_.is_trainable(name);
  n.op = "param";
  nodes_.push_back(std::move(n));
  NodeId id{nodes_.size() - 1};
  param_nodes_.emplace(name, id);
  return id;
}

template <typename T>
NodeId Graph<T>::input(TensorT value) {
  return push("input", std::move(value), false);
}

namespace {

template <typename T>
void require(bool ok, const char* op, const std::string& what) {
  if (!ok) throw ShapeError(std::string(op) + ": " + what);
}

}  // namespace

template <typename T>
NodeId Graph<T>::matmul(NodeId a, NodeId b) {
  const TensorT& A = value(a);
  const TensorT& B = value(b);
  require<T>(A.cols() == B.rows(), "matmul",
             shape_string(A.shape()) + " x " + shape_string(B.shape()));
  TensorT out(Shape{A.rows(), B.cols()});
  out.matrix().noalias() = A.matrix() * B.matrix();
  const bool rg = any_requires_grad({a, b});
  NodeId o = push("matmul", std::move(out), rg);
  if (rg) {
    nodes_[o.index].backprop = [this, a, b, o] {
      const auto G = grad_value(o).matrix();
      if (nodes_[a.index].requires_grad) grad(a).matrix().noalias() += G * value(b).matrix().transpose();
      if (nodes_[b.index].requires_grad) grad(b).matrix().noalias() += value(a).matrix().transpose() * G;
    };
  }
  return o;
}

template <typename T>
NodeId Graph<T>::linear(NodeId x, NodeId w, NodeId b) {
  const TensorT& X = value(x);
  const TensorT& W = value(w);
  const TensorT& Bv = value(b);
  require<T>(X.cols() == W.rows(), "linear",
             shape_string(X.shape()) + " x " + shape_string(W.shape()));
  require<T>(Bv.numel() == W.cols(), "linear", "bias width " + std::to_string(Bv.numel()));
  TensorT out(Shape{X.rows(), W.cols()});
  auto M = out.matrix();
  M.noalias() = X.matrix() * W.matrix();
  M.rowwise() += Bv.matrix().row(0);
  const bool rg = any_requires_grad({x, w, b});
  NodeId o = push("linear", std::move(out), rg);
  if (rg) {
    nodes_[o.index].backprop = [this, x, w, b, o] {
      const auto G = grad_value(o).matrix();
      if (nodes_[x.index].requires_grad) grad(x).matrix().noalias() += G * value(w).matrix().transpose();
      if (nodes_[w.index].requires_grad) grad(w).matrix().noalias() += value(x).matrix().transpose() * G;
      if (nodes_[b.index].requires_grad) grad(b).matrix().row(0) += G.colwise().sum();
    };
  }
  return o;
}

template <typename T>
NodeId Graph<T>::add(NodeId a, NodeId b) {
  const TensorT& A = value(a);
  const TensorT& B = value(b);
  require<T>(A.shape() == B.shape(), "add", shape_string(A.shape()) + " vs " + shape_string(B.shape()));
  TensorT out(A.shape());
  out.matrix() = A.matrix() + B.matrix();
  const bool rg = any_requires_grad({a, b});
  NodeId o = push("add", std::move(out), rg);
  if (rg) {
    nodes_[o.index].backprop = [this, a, b, o] {
      const auto G = grad_value(o).matrix();
      if (nodes_[a.index].requires_grad) grad(a).matrix() += G;
      if (nodes_[b.index].requires_grad) grad(b).matrix() += G;
    };
  }
  return o;
}

template <typename T>
NodeId Graph<T>::sub(NodeId a, NodeId b) {
  const TensorT& A = value(a);
  const TensorT& B = value(b);
  require<T>(A.shape() == B.shape(), "sub", shape_string(A.shape()) + " vs " + shape_string(B.shape()));
  TensorT out(A.shape());
  out.matrix() = A.matrix() - B.matrix();
  const bool rg = any_requires_grad({a, b});
  NodeId o = push("sub", std::move(out), rg);
  if (rg) {
    nodes_[o.index].backprop = [this, a, b, o] {
      const auto G = grad_value(o).matrix();
      if (nodes_[a.index].requires_grad) grad(a).matrix() += G;
      if (nodes_[b.index].requires_grad) grad(b).matrix() -= G;
    };
  }
  return o;
}

template <typename T>
NodeId Graph<T>::mul(NodeId a, NodeId b) {
  const TensorT& A = value(a);
  const TensorT& B = value(b);
  require<T>(A.shape() == B.shape(), "mul", shape_string(A.shape()) + " vs " + shape_string(B.shape()));
  TensorT out(A.shape());
  out.matrix() = A.matrix().cwiseProduct(B.matrix());
  const bool rg = any_requires_grad({a, b});
  NodeId o = push("mul", std::move(out), rg);
  if (rg) {
    nodes_[o.index].backprop = [this, a, b, o] {
      const auto G = grad_value(o).matrix();
      if (nodes_[a.index].requires_grad) grad(a).matrix() += G.cwiseProduct(value(b).matrix());
      if (nodes_[b.index].requires_grad) grad(b).matrix() += G.cwiseProduct(value(a).matrix());
    };
  }
  return o;
}

template <typename T>
NodeId Graph<T>::scale(NodeId a, T factor) {
  const TensorT& A = value(a);
  TensorT out(A.shape());
  out.matrix() = A.matrix() * factor;
  const bool rg = any_requires_grad({a});
  NodeId o = push("scale", std::move(out), rg);
  if (rg) {
    nodes_[o.index].backprop = [this, a, o, factor] {
      grad(a).matrix() += grad_value(o).matrix() * factor;
    };
  }
  return o;
}

template <typename T>
NodeId Graph<T>::silu(NodeId x) {
  const TensorT& X = value(x);
  TensorT out(X.shape());
  auto xs = X.data();
  auto ys = out.data();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const T s = T(1) / (T(1) + std::exp(-xs[i]));
    ys[i] = xs[i] * s;
  }
  const bool rg = any_requires_grad({x});
  NodeId o = push("silu", std::move(out), rg);
  if (rg) {
    nodes_[o.index].backprop = [this, x, o] {
      auto xs = value(x).data();
      auto g = grad_value(o).data();
      auto gx = grad(x).data();
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const T s = T(1) / (T(1) + std::exp(-xs[i]));
        gx[i] += g[i] * s * (T(1) + xs[i] * (T(1) - s));
      }
    };
  }
  return o;
}

template <typename T>
NodeId Graph<T>::softmax_rows(NodeId x) {
  const TensorT& X = value(x);
  TensorT out(X.shape());
  const std::size_t rows = X.rows(), cols = X.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    auto in = X.row(r);
    auto y = out.row(r);
    T mx = in[0];
    for (T v : in) mx = std::max(mx, v);
    T total = 0;
    for (std::size_t c = 0; c < cols; ++c) {
      y[c] = std::exp(in[c] - mx);
      total += y[c];
    }
    for (std::size_t c = 0; c < cols; ++c) y[c] /= total;
  }
  const bool rg = any_requires_grad({x});
  NodeId o = push("softmax", std::move(out), rg);
  if (rg) {
    nodes_[o.index].backprop = [this, x, o] {
      const auto Y = value(o).matrix();
      const auto G = grad_value(o).matrix();
      auto dot = G.cwiseProduct(Y).rowwise().sum().eval();
      auto GX = grad(x).matrix();
      for (Eigen::Index r = 0; r < Y.rows(); ++r) {
        GX.row(r).array() += Y.row(r).array() * (G.row(r).array() - dot(r));
      }
    };
  }
  return o;
}

template <typename T>
NodeId Graph<T>::layer_norm(NodeId x, NodeId gamma, NodeId beta, T eps) {
  const TensorT& X = value(x);
  const TensorT& Gm = value(gamma);
  const TensorT& Bt = value(beta);
  const std::size_t rows = X.rows(), cols = X.cols();
  require<T>(Gm.numel() == cols && Bt.numel() == cols, "layer_norm", "affine width mismatch");
  TensorT xhat(X.shape());
  std::vector<T> inv_std(rows);
  TensorT out(X.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    auto in = X.row(r);
    T mu = 0;
    for (T v : in) mu += v;
    mu /= T(cols);
    T var = 0;
    for (T v : in) var += (v - mu) * (v - mu);
    var /= T(cols);
    const T inv = T(1) / std::sqrt(var + eps);
    inv_std[r] = inv;
    auto xh = xhat.row(r);
    auto y = out.row(r);
    for (std::size_t c = 0; c < cols; ++c) {
      xh[c] = (in[c] - mu) * inv;
      y[c] = xh[c] * Gm[c] + Bt[c];
    }
  }
  const bool rg = any_requires_grad({x, gamma, beta});
  NodeId o = push("layer_norm", std::move(out), rg);
  if (rg) {
    nodes_[o.index].backprop = [this, x, gamma, beta, o, xhat = std::move(xhat),
                                inv_std = std::move(inv_std)] {
      const TensorT& G = grad_value(o);
      const TensorT& Gm = value(gamma);
      const std::size_t rows = G.rows(), cols = G.cols();
      if (nodes_[gamma.index].requires_grad || nodes_[beta.index].requires_grad) {
        const bool want_g = nodes_[gamma.index].requires_grad;
        const bool want_b = nodes_[beta.index].requires_grad;
        for (std::size_t r = 0; r < rows; ++r) {
          auto g = G.row(r);
          auto xh = xhat.row(r);
          for (std::size_t c = 0; c < cols; ++c) {
            if (want_g) grad(gamma)[c] += g[c] * xh[c];
            if (want_b) grad(beta)[c] += g[c];
          }
        }
      }
      if (nodes_[x.index].requires_grad) {
        TensorT& GX = grad(x);
        std::vector<T> gxh(cols);
        for (std::size_t r = 0; r < rows; ++r) {
          auto g = G.row(r);
          auto xh = xhat.row(r);
          T mean_g = 0, mean_gx = 0;
          for (std::size_t c = 0; c < cols; ++c) {
            gxh[c] = g[c] * Gm[c];
            mean_g += gxh[c];
            mean_gx += gxh[c] * xh[c];
          }
          mean_g /= T(cols);
          mean_gx /= T(cols);
          auto gx = GX.row(r);
          for (std::size_t c = 0; c < cols; ++c) {
            gx[c] += inv_std[r] * (gxh[c] - mean_g - xh[c] * mean_gx);
          }
        }
      }
    };
  }
  return o;
}

template <typename T>
NodeId Graph<T>::gather_rows(NodeId table, std::span<const std::size_t> rows) {
  const TensorT& Tb = value(table);
  const std::size_t width = Tb.cols();
  TensorT out(Shape{rows.size(), width});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= Tb.rows()) {
      throw std::out_of_range("gather_rows: row " + std::to_string(rows[i]) + " >= " +
                              std::to_string(Tb.rows()));
    }
    auto src = Tb.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  const bool rg = any_requires_grad({table});
  NodeId o = push("gather_rows", std::move(out), rg);
  if (rg) {
    nodes_[o.index].backprop = [this, table, o, idx = std::vector<std::size_t>(rows.begin(), rows.end())] {
      const TensorT& G = grad_value(o);
      TensorT& GT = grad(table);
      for (std::size_t i = 0; i < idx.size(); ++i) {
        auto g = G.row(i);
        auto dst = GT.row(idx[i]);
        for (std::size_t c = 0; c < g.size(); ++c) dst[c] += g[c];
      }
    };
  }
  return o;
}

template <typename T>
NodeId Graph<T>::segment_mean(NodeId x, std::span<const std::size_t> offsets) {
  const TensorT& X = value(x);
  require<T>(offsets.size() >= 2 && offsets.front() == 0 && offsets.back() == X.rows(),
             "segment_mean", "offsets must span all rows");
  const std::size_t segs = offsets.size() - 1, width = X.cols();
  TensorT out(Shape{segs, width});
  for (std::size_t s = 0; s < segs; ++s) {
    require<T>(offsets[s + 1] > offsets[s], "segment_mean", "empty segment");
    auto y = out.row(s);
    for (std::size_t r = offsets[s]; r < offsets[s + 1]; ++r) {
      auto in = X.row(r);
      for (std::size_t c = 0; c < width; ++c) y[c] += in[c];
    }
    const T inv = T(1) / T(offsets[s + 1] - offsets[s]);
    for (auto& v : y) v *= inv;
  }
  const bool rg = any_requires_grad({x});
  NodeId o = push("segment_mean", std::move(out), rg);
  if (rg) {
    nodes_[o.index].backprop = [this, x, o, off = std::vector<std::size_t>(offsets.begin(), offsets.end())] {
      const TensorT& G = grad_value(o);
      TensorT& GX = grad(x);
      for (std::size_t s = 0; s + 1 < off.size(); ++s) {
        const T inv = T(1) / T(off[s + 1] - off[s]);
        auto g = G.row(s);
        for (std::size_t r = off[s]; r < off[s + 1]; ++r) {
          auto dst = GX.row(r);
          for (std::size_t c = 0; c < g.size(); ++c) dst[c] += g[c] * inv;
        }
      }
    };
  }
  return o;
}

template <typename T>
NodeId Graph<T>::concat_cols(std::span<const NodeId> parts) {
  require<T>(!parts.empty(), "concat_cols", "no inputs");
  const std::size_t rows = value(parts[0]).rows();
  std::size_t width = 0;
  bool rg = false;
  for (NodeId p : parts) {
    require<T>(value(p).rows() == rows, "concat_cols", "row count mismatch");
    width += value(p).cols();
    rg = rg || nodes_[p.index].requires_grad;
  }
  TensorT out(Shape{rows, width});
  std::size_t col = 0;
  for (NodeId p : parts) {
    const TensorT& P = value(p);
    out.matrix().block(0, col, rows, P.cols()) = P.matrix();
    col += P.cols();
  }
  NodeId o = push("concat_cols", std::move(out), rg);
  if (rg) {
    nodes_[o.index].backprop = [this, o, ps = std::vector<NodeId>(parts.begin(), parts.end())] {
      const auto G = grad_value(o).matrix();
      std::size_t col = 0;
      for (NodeId p : ps) {
        const std::size_t w = value(p).cols();
        if (nodes_[p.index].requires_grad) grad(p).matrix() += G.block(0, col, G.rows(), w);
        col += w;
      }
    };
  }
  return o;
}

template <typename T>
NodeId Graph<T>::slice_rows(NodeId x, std::size_t begin, std::size_t end) {
  const TensorT& X = value(x);
  require<T>(begin <= end && end <= X.rows() && X.rank() == 2, "slice_rows", "bad range");
  TensorT out(Shape{end - begin, X.cols()});
  out.matrix() = X.matrix().middleRows(begin, end - begin);
  const bool rg = any_requires_grad({x});
  NodeId o = push("slice_rows", std::move(out), rg);
  if (rg) {
    nodes_[o.index].backprop = [this, x, o, begin, end] {
      grad(x).matrix().middleRows(begin, end - begin) += grad_value(o).matrix();
    };
  }
  return o;
}

template <typename T>
NodeId Graph<T>::squared_error(NodeId a, NodeId b) {
  const TensorT& A = value(a);
  const TensorT& B = value(b);
  require<T>(A.shape() == B.shape(), "squared_error",
             shape_string(A.shape()) + " vs " + shape_string(B.shape()));
  require<T>(A.rows() > 0, "squared_error", "empty batch");
  const T inv_rows = T(1) / T(A.rows());
  const T loss = (A.matrix() - B.matrix()).squaredNorm() * inv_rows;
  const bool rg = any_requires_grad({a, b});
  NodeId o = push("squared_error", TensorT::scalar(loss), rg);
  if (rg) {
    nodes_[o.index].backprop = [this, a, b, o, inv_rows] {
      const T g = grad_value(o).item() * T(2) * inv_rows;
      if (nodes_[a.index].requires_grad) grad(a).matrix() += (value(a).matrix() - value(b).matrix()) * g;
      if (nodes_[b.index].requires_grad) grad(b).matrix() -= (value(a).matrix() - value(b).matrix()) * g;
    };
  }
  return o;
}

template <typename T>
NodeId Graph<T>::cross_entropy(NodeId logits, std::span<const std::size_t> labels) {
  const TensorT& L = value(logits);
  const std::size_t rows = L.rows(), cols = L.cols();
  require<T>(labels.size() == rows && rows > 0, "cross_entropy", "label count mismatch");
  TensorT probs(Shape{rows, cols});
  T total = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    require<T>(labels[r] < cols, "cross_entropy", "label out of range");
    auto in = L.row(r);
    auto p = probs.row(r);
    T mx = in[0];
    for (T v : in) mx = std::max(mx, v);
    T z = 0;
    for (std::size_t c = 0; c < cols; ++c) {
      p[c] = std::exp(in[c] - mx);
      z += p[c];
    }
    for (auto& v : p) v /= z;
    total += std::log(z) + mx - in[labels[r]];
  }
  const bool rg = any_requires_grad({logits});
  NodeId o = push("cross_entropy", TensorT::scalar(total / T(rows)), rg);
  if (rg) {
    nodes_[o.index].backprop = [this, logits, o, probs = std::move(probs),
                                lab = std::vector<std::size_t>(labels.begin(), labels.end())] {
      const T g = grad_value(o).item() / T(lab.size());
      TensorT& GL = grad(logits);
      for (std::size_t r = 0; r < lab.size(); ++r) {
        auto p = probs.row(r);
        auto gl = GL.row(r);
        for (std::size_t c = 0; c < p.size(); ++c) gl[c] += g * (p[c] - (c == lab[r] ? T(1) : T(0)));
      }
    };
  }
  return o;
}

template <typename T>
NodeId Graph<T>::sum(NodeId x) {
  const TensorT& X = value(x);
  const bool rg = any_requires_grad({x});
  NodeId o = push("sum", TensorT::scalar(X.matrix().sum()), rg);
  if (rg) {
    nodes_[o.index].backprop = [this, x, o] {
      grad(x).matrix().array() += grad_value(o).item();
    };
  }
  return o;
}

template <typename T>
NodeId Graph<T>::mean(NodeId x) {
  const TensorT& X = value(x);
  const T inv = T(1) / T(X.numel());
  const bool rg = any_requires_grad({x});
  NodeId o = push("mean", TensorT::scalar(X.matrix().sum() * inv), rg);
  if (rg) {
    nodes_[o.index].backprop = [this, x, o, inv] {
      grad(x).matrix().array() += grad_value(o).item() * inv;
    };
  }
  return o;
}

template <typename T>
typename Graph<T>::Grads Graph<T>::backward(NodeId loss) {
  if (value(loss).numel() != 1) {
    throw ShapeError("backward: loss must be a single value, got shape " +
                     shape_string(value(loss).shape()));
  }
  Grads out;
  if (!track_grads_) return out;
  for (const auto& name : params_.trainable_names()) {
    out.emplace(name, TensorT(params_.get(name).shape()));
  }
  if (!nodes_[loss.index].requires_grad) return out;

  grad(loss)[0] = T(1);
  for (std::size_t i = loss.index + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.requires_grad && n.has_grad && n.backprop) n.backprop();
  }
  for (const auto& [name, id] : param_nodes_) {
    const Node& n = nodes_[id.index];
    if (n.requires_grad && n.has_grad) {
      if (!n.grad.all_finite()) throw NonFiniteError("non-finite gradient for " + name);
      out[name] = n.grad;
    }
  }
  return out;
}

template class Graph<float>;
template class Graph<double>;

}  // namespace ptlab::nncore
