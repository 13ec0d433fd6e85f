#include "bp/graph.hpp"

#include <cmath>
#include <stdexcept>

namespace bp {

namespace {

constexpr double kLayerNormEps = 1e-5;

[[noreturn]] void fail(const char* op, const std::string& msg) {
  throw std::invalid_argument(std::string(op) + ": " + msg);
}

enum class Bcast { Same, RowVec, ColVec };

Bcast broadcast_kind(const char* op, const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) fail(op, "operands must be 2-D, got " + a.shape_str() + " and " + b.shape_str());
  if (a.same_shape(b)) return Bcast::Same;
  if (b.rows() == 1 && b.cols() == a.cols()) return Bcast::RowVec;
  if (b.cols() == 1 && b.rows() == a.rows()) return Bcast::ColVec;
  fail(op, "shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

// b broadcast against a's shape, element (r,c).
inline double pick(const Tensor& b, Bcast k, int r, int c) {
  switch (k) {
    case Bcast::Same: return b.at(r, c);
    case Bcast::RowVec: return b.at(0, c);
    case Bcast::ColVec: return b.at(r, 0);
  }
  return 0.0;  // unreachable
}

// Accumulate g (shaped like a) into the broadcast operand's gradient.
void reduce_into(Tensor& db, Bcast k, const Tensor& g, double sign) {
  const int rows = g.rows(), cols = g.cols();
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double& slot = (k == Bcast::Same) ? db.at(r, c) : (k == Bcast::RowVec ? db.at(0, c) : db.at(r, 0));
      slot += sign * g.at(r, c);
    }
}

Tensor matmul_raw(const Tensor& a, const Tensor& b, bool ta, bool tb) {
  if (a.rank() != 2 || b.rank() != 2)
    fail("matmul", "operands must be 2-D, got " + a.shape_str() + " and " + b.shape_str());
  const int m = ta ? a.cols() : a.rows();
  const int k = ta ? a.rows() : a.cols();
  const int kb = tb ? b.cols() : b.rows();
  const int n = tb ? b.rows() : b.cols();
  if (k != kb)
    fail("matmul", "inner dims differ: " + a.shape_str() + (ta ? "^T" : "") + " * " + b.shape_str() + (tb ? "^T" : ""));
  Tensor out({m, n});
  if (!ta && !tb) {
    for (int i = 0; i < m; ++i) {
      const double* arow = a.data() + static_cast<std::size_t>(i) * k;
      double* orow = out.data() + static_cast<std::size_t>(i) * n;
      for (int kk = 0; kk < k; ++kk) {
        const double av = arow[kk];
        const double* brow = b.data() + static_cast<std::size_t>(kk) * n;
        for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
      }
    }
  } else if (!ta && tb) {
    for (int i = 0; i < m; ++i) {
      const double* arow = a.data() + static_cast<std::size_t>(i) * k;
      double* orow = out.data() + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) {
        const double* brow = b.data() + static_cast<std::size_t>(j) * k;
        double s = 0.0;
        for (int kk = 0; kk < k; ++kk) s += arow[kk] * brow[kk];
        orow[j] = s;
      }
    }
  } else if (ta && !tb) {
    for (int kk = 0; kk < k; ++kk) {
      const double* arow = a.data() + static_cast<std::size_t>(kk) * m;
      const double* brow = b.data() + static_cast<std::size_t>(kk) * n;
      for (int i = 0; i < m; ++i) {
        const double av = arow[i];
        double* orow = out.data() + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
      }
    }
  } else {
    // (A^T B^T) = (B A)^T
    Tensor tmp = matmul_raw(b, a, false, false);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) out.at(i, j) = tmp.at(j, i);
  }
  return out;
}

}  // namespace

const char* op_name(Graph::Op op) {
  switch (op) {
    case Graph::Op::Input: return "input";
    case Graph::Op::Add: return "add";
    case Graph::Op::Sub: return "sub";
    case Graph::Op::Scale: return "scale";
    case Graph::Op::Mul: return "mul";
    case Graph::Op::MatMul: return "matmul";
    case Graph::Op::Relu: return "relu";
    case Graph::Op::SoftmaxRows: return "softmax_rows";
    case Graph::Op::Mse: return "mse";
    case Graph::Op::ConcatCols: return "concat_cols";
    case Graph::Op::TimeEmbed: return "time_embed";
    case Graph::Op::LayerNorm: return "layer_norm";
  }
  return "?";
}

NodeId Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  forward_done_ = false;
  return static_cast<NodeId>(nodes_.size() - 1);
}

void Graph::check_id(NodeId id) const {
  if (id < 0 || id >= static_cast<NodeId>(nodes_.size()))
    throw std::invalid_argument("graph: invalid node id");
}

NodeId Graph::input(const std::string& name, bool differentiable) {
  Node n;
  n.op = Op::Input;
  n.name = name;
  n.differentiable = differentiable;
  return push(std::move(n));
}

NodeId Graph::unary(Op op, NodeId a) {
  check_id(a);
  Node n;
  n.op = op;
  n.in[0] = a;
  n.n_in = 1;
  return push(std::move(n));
}

NodeId Graph::binary(Op op, NodeId a, NodeId b) {
  check_id(a);
  check_id(b);
  Node n;
  n.op = op;
  n.in[0] = a;
  n.in[1] = b;
  n.n_in = 2;
  return push(std::move(n));
}

NodeId Graph::add(NodeId a, NodeId b) { return binary(Op::Add, a, b); }
NodeId Graph::sub(NodeId a, NodeId b) { return binary(Op::Sub, a, b); }
NodeId Graph::mul(NodeId a, NodeId b) { return binary(Op::Mul, a, b); }
NodeId Graph::mse(NodeId pred, NodeId target) { return binary(Op::Mse, pred, target); }
NodeId Graph::concat_cols(NodeId a, NodeId b) { return binary(Op::ConcatCols, a, b); }
NodeId Graph::relu(NodeId a) { return unary(Op::Relu, a); }
NodeId Graph::softmax_rows(NodeId a) { return unary(Op::SoftmaxRows, a); }
NodeId Graph::layer_norm(NodeId a) { return unary(Op::LayerNorm, a); }

NodeId Graph::scale(NodeId a, double factor) {
  NodeId id = unary(Op::Scale, a);
  nodes_[id].factor = factor;
  return id;
}

NodeId Graph::matmul(NodeId a, NodeId b, bool trans_a, bool trans_b) {
  NodeId id = binary(Op::MatMul, a, b);
  nodes_[id].trans_a = trans_a;
  nodes_[id].trans_b = trans_b;
  return id;
}

NodeId Graph::time_embed(NodeId t, int dim) {
  if (dim < 2 || dim % 2 != 0) throw std::invalid_argument("time_embed: dim must be even and >= 2");
  NodeId id = unary(Op::TimeEmbed, t);
  nodes_[id].embed_dim = dim;
  return id;
}

void Graph::eval(Node& n, const TensorMap& inputs) {
  const Tensor* a = n.n_in > 0 ? &nodes_[n.in[0]].value : nullptr;
  const Tensor* b = n.n_in > 1 ? &nodes_[n.in[1]].value : nullptr;
  switch (n.op) {
    case Op::Input: {
      auto it = inputs.find(n.name);
      if (it == inputs.end()) throw std::invalid_argument("forward: input '" + n.name + "' not bound");
      if (it->second.rank() != 2)
        throw std::invalid_argument("forward: input '" + n.name + "' must be 2-D, got " +
                                    it->second.shape_str());
      n.value = it->second;
      break;
    }
    case Op::Add:
    case Op::Sub: {
      const Bcast k = broadcast_kind(op_name(n.op), *a, *b);
      const double sign = n.op == Op::Add ? 1.0 : -1.0;
      Tensor out = *a;
      for (int r = 0; r < out.rows(); ++r)
        for (int c = 0; c < out.cols(); ++c) out.at(r, c) += sign * pick(*b, k, r, c);
      n.value = std::move(out);
      break;
    }
    case Op::Mul: {
      const Bcast k = broadcast_kind("mul", *a, *b);
      Tensor out = *a;
      for (int r = 0; r < out.rows(); ++r)
        for (int c = 0; c < out.cols(); ++c) out.at(r, c) *= pick(*b, k, r, c);
      n.value = std::move(out);
      break;
    }
    case Op::Scale: {
      if (a->rank() != 2) fail("scale", "operand must be 2-D, got " + a->shape_str());
      n.value = bp::scale(*a, n.factor);
      break;
    }
    case Op::MatMul:
      n.value = matmul_raw(*a, *b, n.trans_a, n.trans_b);
      break;
    case Op::Relu: {
      Tensor out = *a;
      for (std::size_t i = 0; i < out.size(); ++i)
        if (out[i] < 0.0) out[i] = 0.0;
      n.value = std::move(out);
      break;
    }
    case Op::SoftmaxRows: {
      if (a->rank() != 2) fail("softmax_rows", "operand must be 2-D, got " + a->shape_str());
      Tensor out = *a;
      for (int r = 0; r < out.rows(); ++r) {
        double mx = out.at(r, 0);
        for (int c = 1; c < out.cols(); ++c) mx = std::max(mx, out.at(r, c));
        double sum = 0.0;
        for (int c = 0; c < out.cols(); ++c) {
          out.at(r, c) = std::exp(out.at(r, c) - mx);
          sum += out.at(r, c);
        }
        for (int c = 0; c < out.cols(); ++c) out.at(r, c) /= sum;
      }
      n.value = std::move(out);
      break;
    }
    case Op::Mse: {
      if (!a->same_shape(*b))
        fail("mse", "shape mismatch " + a->shape_str() + " vs " + b->shape_str());
      n.value = Tensor({1, 1}, {squared_error_sum(*a, *b) / static_cast<double>(a->size())});
      break;
    }
    case Op::ConcatCols: {
      if (a->rank() != 2 || b->rank() != 2 || a->rows() != b->rows())
        fail("concat_cols", "row counts differ: " + a->shape_str() + " vs " + b->shape_str());
      Tensor out({a->rows(), a->cols() + b->cols()});
      for (int r = 0; r < a->rows(); ++r) {
        for (int c = 0; c < a->cols(); ++c) out.at(r, c) = a->at(r, c);
        for (int c = 0; c < b->cols(); ++c) out.at(r, a->cols() + c) = b->at(r, c);
      }
      n.value = std::move(out);
      break;
    }
    case Op::TimeEmbed: {
      if (a->rank() != 2 || a->cols() != 1)
        fail("time_embed", "operand must be [B,1], got " + a->shape_str());
      const int half = n.embed_dim / 2;
      Tensor out({a->rows(), n.embed_dim});
      for (int r = 0; r < a->rows(); ++r) {
        const double t = a->at(r, 0);
        for (int k = 0; k < half; ++k) {
          const double w =
              half > 1 ? std::exp(std::log(1000.0) * static_cast<double>(k) / (half - 1)) : 1.0;
          out.at(r, 2 * k) = std::sin(w * t);
          out.at(r, 2 * k + 1) = std::cos(w * t);
        }
      }
      n.value = std::move(out);
      break;
    }
    case Op::LayerNorm: {
      if (a->rank() != 2) fail("layer_norm", "operand must be 2-D, got " + a->shape_str());
      Tensor out = *a;
      const int cols = out.cols();
      for (int r = 0; r < out.rows(); ++r) {
        double mu = 0.0;
        for (int c = 0; c < cols; ++c) mu += out.at(r, c);
        mu /= cols;
        double var = 0.0;
        for (int c = 0; c < cols; ++c) {
          const double d = out.at(r, c) - mu;
          var += d * d;
        }
        var /= cols;
        const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
        for (int c = 0; c < cols; ++c) out.at(r, c) = (out.at(r, c) - mu) * inv;
      }
      n.value = std::move(out);
      break;
    }
  }
  n.value.require_finite(op_name(n.op));
  n.has_value = true;
}

const Tensor& Graph::forward(NodeId output, const TensorMap& inputs) {
  check_id(output);
  for (NodeId i = 0; i <= output; ++i) eval(nodes_[i], inputs);
  last_output_ = output;
  forward_done_ = true;
  return nodes_[output].value;
}

void Graph::propagate(Node& n) {
  const Tensor& g = n.grad;
  Tensor* da = n.n_in > 0 ? &nodes_[n.in[0]].grad : nullptr;
  Tensor* db = n.n_in > 1 ? &nodes_[n.in[1]].grad : nullptr;
  const Tensor* a = n.n_in > 0 ? &nodes_[n.in[0]].value : nullptr;
  const Tensor* b = n.n_in > 1 ? &nodes_[n.in[1]].value : nullptr;
  switch (n.op) {
    case Op::Input:
      break;
    case Op::Add:
    case Op::Sub: {
      const Bcast k = broadcast_kind(op_name(n.op), *a, *b);
      for (std::size_t i = 0; i < g.size(); ++i) (*da)[i] += g[i];
      reduce_into(*db, k, g, n.op == Op::Add ? 1.0 : -1.0);
      break;
    }
    case Op::Mul: {
      const Bcast k = broadcast_kind("mul", *a, *b);
      for (int r = 0; r < g.rows(); ++r)
        for (int c = 0; c < g.cols(); ++c) {
          da->at(r, c) += g.at(r, c) * pick(*b, k, r, c);
          double& slot = (k == Bcast::Same) ? db->at(r, c)
                                            : (k == Bcast::RowVec ? db->at(0, c) : db->at(r, 0));
          slot += g.at(r, c) * a->at(r, c);
        }
      break;
    }
    case Op::Scale:
      for (std::size_t i = 0; i < g.size(); ++i) (*da)[i] += n.factor * g[i];
      break;
    case Op::MatMul: {
      Tensor ga, gb;
      if (!n.trans_a && !n.trans_b) {
        ga = matmul_raw(g, *b, false, true);
        gb = matmul_raw(*a, g, true, false);
      } else if (n.trans_a && !n.trans_b) {
        ga = matmul_raw(*b, g, false, true);
        gb = matmul_raw(*a, g, false, false);
      } else if (!n.trans_a && n.trans_b) {
        ga = matmul_raw(g, *b, false, false);
        gb = matmul_raw(g, *a, true, false);
      } else {
        ga = matmul_raw(*b, g, true, true);
        gb = matmul_raw(g, *a, true, true);
      }
      for (std::size_t i = 0; i < ga.size(); ++i) (*da)[i] += ga[i];
      for (std::size_t i = 0; i < gb.size(); ++i) (*db)[i] += gb[i];
      break;
    }
    case Op::Relu:
      for (std::size_t i = 0; i < g.size(); ++i)
        if ((*a)[i] > 0.0) (*da)[i] += g[i];
      break;
    case Op::SoftmaxRows: {
      const Tensor& y = n.value;
      for (int r = 0; r < y.rows(); ++r) {
        double dot = 0.0;
        for (int c = 0; c < y.cols(); ++c) dot += g.at(r, c) * y.at(r, c);
        for (int c = 0; c < y.cols(); ++c) da->at(r, c) += y.at(r, c) * (g.at(r, c) - dot);
      }
      break;
    }
    case Op::Mse: {
      const double go = g[0];
      const double inv = 2.0 / static_cast<double>(a->size());
      for (std::size_t i = 0; i < a->size(); ++i) {
        const double d = inv * ((*a)[i] - (*b)[i]) * go;
        (*da)[i] += d;
        (*db)[i] -= d;
      }
      break;
    }
    case Op::ConcatCols: {
      for (int r = 0; r < a->rows(); ++r) {
        for (int c = 0; c < a->cols(); ++c) da->at(r, c) += g.at(r, c);
        for (int c = 0; c < b->cols(); ++c) db->at(r, c) += g.at(r, a->cols() + c);
      }
      break;
    }
    case Op::TimeEmbed:
      break;  // stop-gradient by contract
    case Op::LayerNorm: {
      const Tensor& x = *a;
      const int cols = x.cols();
      for (int r = 0; r < x.rows(); ++r) {
        double mu = 0.0;
        for (int c = 0; c < cols; ++c) mu += x.at(r, c);
        mu /= cols;
        double var = 0.0;
        for (int c = 0; c < cols; ++c) {
          const double d = x.at(r, c) - mu;
          var += d * d;
        }
        var /= cols;
        const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
        double gmean = 0.0, gydot = 0.0;
        for (int c = 0; c < cols; ++c) {
          gmean += g.at(r, c);
          gydot += g.at(r, c) * n.value.at(r, c);
        }
        gmean /= cols;
        gydot /= cols;
        for (int c = 0; c < cols; ++c)
          da->at(r, c) += inv * (g.at(r, c) - gmean - n.value.at(r, c) * gydot);
      }
      break;
    }
  }
}

TensorMap Graph::backward(const Tensor& output_gradient) {
  if (!forward_done_) throw std::logic_error("backward called before forward");
  Node& out = nodes_[last_output_];
  if (!output_gradient.same_shape(out.value))
    throw std::invalid_argument("backward: output gradient shape " + output_gradient.shape_str() +
                                " does not match output " + out.value.shape_str());
  for (NodeId i = 0; i <= last_output_; ++i) nodes_[i].grad = Tensor(nodes_[i].value.shape());
  out.grad = output_gradient;
  for (NodeId i = last_output_; i >= 0; --i) propagate(nodes_[i]);
  TensorMap grads;
  for (NodeId i = 0; i <= last_output_; ++i) {
    const Node& n = nodes_[i];
    if (n.op == Op::Input && n.differentiable) {
      auto [it, inserted] = grads.emplace(n.name, n.grad);
      if (!inserted) {  // same leaf name used twice: accumulate
        it->second = bp::add(it->second, n.grad);
      }
    }
  }
  return grads;
}

const Tensor& Graph::value(NodeId id) const {
  check_id(id);
  if (!nodes_[id].has_value) throw std::logic_error("value(): node not evaluated");
  return nodes_[id].value;
}

}  // namespace bp
