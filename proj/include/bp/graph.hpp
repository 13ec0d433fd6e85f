#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "bp/tensor.hpp"

namespace bp {

using NodeId = int;
using TensorMap = std::map<std::string, Tensor>;

// Reverse-mode autodiff over a fixed op set. A Graph is pure structure:
// values for named leaves are bound per forward() call, intermediates are
// cached for backward(). Nodes only reference earlier nodes, so insertion
// order is a topological order and the structure is acyclic by construction.
//
// All graph tensors are 2-D. Supported limited broadcasting for
// add/sub/mul: the second operand may be a row vector [1,C] or a column
// vector [R,1] against a full [R,C] first operand (bias add, per-row gate).
// There is no general broadcasting.
class Graph {
 public:
  enum class Op {
    Input,
    Add,
    Sub,
    Scale,       // multiply by a compile-time scalar
    Mul,         // elementwise
    MatMul,      // with transpose flags
    Relu,
    SoftmaxRows,
    Mse,         // mean over all entries of squared difference -> [1,1]
    ConcatCols,
    TimeEmbed,   // sinusoidal embedding of a [B,1] column; no gradient
    LayerNorm,   // row-wise, no affine
  };

  // Leaves. Values are supplied by name at forward() time. Gradients are
  // returned by backward() only for leaves marked differentiable.
  NodeId input(const std::string& name, bool differentiable = false);

  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId scale(NodeId a, double factor);
  NodeId mul(NodeId a, NodeId b);
  NodeId matmul(NodeId a, NodeId b, bool trans_a = false, bool trans_b = false);
  NodeId relu(NodeId a);
  NodeId softmax_rows(NodeId a);
  NodeId mse(NodeId pred, NodeId target);
  NodeId concat_cols(NodeId a, NodeId b);
  NodeId time_embed(NodeId t, int dim);
  NodeId layer_norm(NodeId a);

  // Binds leaves, evaluates every node up to `output`, returns its value.
  // Extra entries in `inputs` are ignored; a missing leaf is an error.
  const Tensor& forward(NodeId output, const TensorMap& inputs);

  // Gradients of the last forward() output w.r.t. every differentiable
  // leaf. output_gradient must match the output shape. Error if no forward
  // has run.
  TensorMap backward(const Tensor& output_gradient);

  const Tensor& value(NodeId id) const;
  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Op op;
    std::array<NodeId, 2> in{-1, -1};
    int n_in = 0;
    double factor = 1.0;      // Scale
    bool trans_a = false;     // MatMul
    bool trans_b = false;
    int embed_dim = 0;        // TimeEmbed
    std::string name;         // Input
    bool differentiable = false;
    Tensor value;
    Tensor grad;
    bool has_value = false;
  };

  NodeId push(Node n);
  NodeId unary(Op op, NodeId a);
  NodeId binary(Op op, NodeId a, NodeId b);
  void check_id(NodeId id) const;
  void eval(Node& n, const TensorMap& inputs);
  void propagate(Node& n);

  std::vector<Node> nodes_;
  NodeId last_output_ = -1;
  bool forward_done_ = false;
};

const char* op_name(Graph::Op op);

}  // namespace bp
