#include "bp/backbone.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "bp/hash.hpp"
#include "bp/optim.hpp"
#include "bp/rng.hpp"

namespace bp {

void BackboneConfig::validate() const {
  if (input_dim < 1 || hidden_dim < 1 || hidden_layers < 0 || context_tokens < 1 ||
      context_dim < 1 || attn_dim < 1)
    throw std::invalid_argument("BackboneConfig: dims must be >= 1");
  if (time_dim < 2 || time_dim % 2 != 0)
    throw std::invalid_argument("BackboneConfig: time_dim must be even and >= 2");
  if (pretrain_steps < 1 || pretrain_batch < 1)
    throw std::invalid_argument("BackboneConfig: pretrain steps/batch must be >= 1");
}

std::uint64_t quantized_hash(const TensorMap& tensors) {
  Fnv1a h;
  for (const auto& [name, t] : tensors) {
    h.update(name);
    h.update_u32(static_cast<std::uint32_t>(t.rank()));
    for (int d : t.shape()) h.update_u32(static_cast<std::uint32_t>(d));
    for (std::size_t i = 0; i < t.size(); ++i) h.update_f32(static_cast<float>(t[i]));
  }
  return h.digest();
}

Backbone::Backbone(BackboneConfig cfg, TensorMap weights) : cfg_(cfg), w_(std::move(weights)) {
  cfg_.validate();
  if (!w_.count("backbone.e_null")) throw std::invalid_argument("Backbone: missing e_null");
}

Backbone::Backbone(const Backbone& other)
    : cfg_(other.cfg_),
      w_(other.w_),
      frozen_(other.frozen_),
      frozen_hash_(other.frozen_hash_),
      evals_(other.eval_count()) {}

Backbone::Backbone(Backbone&& other) noexcept
    : cfg_(std::move(other.cfg_)),
      w_(std::move(other.w_)),
      frozen_(other.frozen_),
      frozen_hash_(other.frozen_hash_),
      evals_(other.eval_count()) {}

Backbone& Backbone::operator=(const Backbone& other) {
  if (this != &other) {
    cfg_ = other.cfg_;
    w_ = other.w_;
    frozen_ = other.frozen_;
    frozen_hash_ = other.frozen_hash_;
    evals_.store(other.eval_count(), std::memory_order_relaxed);
  }
  return *this;
}

Backbone& Backbone::operator=(Backbone&& other) noexcept {
  if (this != &other) {
    cfg_ = std::move(other.cfg_);
    w_ = std::move(other.w_);
    frozen_ = other.frozen_;
    frozen_hash_ = other.frozen_hash_;
    evals_.store(other.eval_count(), std::memory_order_relaxed);
  }
  return *this;
}

Backbone Backbone::random_init(const BackboneConfig& cfg, const Tokenizer& tok,
                               const TextEncoder& te) {
  cfg.validate();
  if (te.out_dim() != cfg.context_dim)
    throw std::invalid_argument("Backbone: text encoder output dim does not match context_dim");
  Rng rng(hash_combine(cfg.seed, 0xbb));
  TensorMap w;
  const int in = cfg.input_dim + cfg.time_dim;
  const int h = cfg.hidden_dim;
  w.emplace("backbone.W_in", rng.normal_tensor({in, h}, std::sqrt(2.0 / in)));
  w.emplace("backbone.b_in", Tensor({1, h}));
  w.emplace("backbone.attn.Wq", rng.normal_tensor({h, cfg.attn_dim}, std::sqrt(1.0 / h)));
  w.emplace("backbone.attn.Wk",
            rng.normal_tensor({cfg.context_dim, cfg.attn_dim}, std::sqrt(1.0 / cfg.context_dim)));
  w.emplace("backbone.attn.Wv",
            rng.normal_tensor({cfg.context_dim, cfg.attn_dim}, std::sqrt(1.0 / cfg.context_dim)));
  // small output projection so the residual branch starts near identity
  w.emplace("backbone.attn.Wo", rng.normal_tensor({cfg.attn_dim, h}, 0.1 * std::sqrt(1.0 / cfg.attn_dim)));
  for (int i = 0; i < cfg.hidden_layers; ++i) {
    std::ostringstream os;
    os << "backbone.layer" << i;
    w.emplace(os.str() + ".W", rng.normal_tensor({h, h}, std::sqrt(2.0 / h)));
    w.emplace(os.str() + ".b", Tensor({1, h}));
  }
  w.emplace("backbone.W_out", rng.normal_tensor({h, cfg.input_dim}, std::sqrt(1.0 / h)));
  w.emplace("backbone.b_out", Tensor({1, cfg.input_dim}));
  // null context: the encoding of an all-<PAD> symbol string
  w.emplace("backbone.e_null", te.encode(tok.embed("", cfg.context_tokens)));
  return Backbone(cfg, std::move(w));
}

std::uint64_t Backbone::content_hash() const { return quantized_hash(w_); }

void Backbone::freeze() {
  if (frozen_) return;
  frozen_ = true;
  frozen_hash_ = content_hash();
}

std::uint64_t Backbone::frozen_hash() const {
  if (!frozen_) throw std::logic_error("Backbone: frozen_hash() before freeze()");
  return frozen_hash_;
}

void Backbone::verify_frozen_hash() const {
  if (!frozen_) throw std::logic_error("Backbone: verify_frozen_hash() before freeze()");
  if (content_hash() != frozen_hash_)
    throw std::logic_error("Backbone: frozen weights changed (hash mismatch)");
}

TensorMap& Backbone::mutable_weights() {
  if (frozen_) throw std::logic_error("Backbone: weights are frozen");
  return w_;
}

NodeId Backbone::build_velocity(Graph& g, NodeId z, NodeId t, NodeId context,
                                bool weights_trainable) const {
  auto leaf = [&](const std::string& name) { return g.input(name, weights_trainable); };
  NodeId temb = g.time_embed(t, cfg_.time_dim);
  NodeId h = g.concat_cols(z, temb);
  h = g.relu(g.add(g.matmul(h, leaf("backbone.W_in")), leaf("backbone.b_in")));
  // single-head cross-attention; queries from features, keys/values from context
  NodeId q = g.matmul(h, leaf("backbone.attn.Wq"));                  // [B,A]
  NodeId k = g.matmul(context, leaf("backbone.attn.Wk"));            // [L,A]
  NodeId v = g.matmul(context, leaf("backbone.attn.Wv"));            // [L,A]
  NodeId scores = g.scale(g.matmul(q, k, false, true), 1.0 / std::sqrt(cfg_.attn_dim));
  NodeId attn = g.softmax_rows(scores);                              // [B,L]
  NodeId mixed = g.matmul(attn, v);                                  // [B,A]
  h = g.layer_norm(g.add(h, g.matmul(mixed, leaf("backbone.attn.Wo"))));
  for (int i = 0; i < cfg_.hidden_layers; ++i) {
    std::ostringstream os;
    os << "backbone.layer" << i;
    h = g.relu(g.add(g.matmul(h, leaf(os.str() + ".W")), leaf(os.str() + ".b")));
  }
  return g.add(g.matmul(h, leaf("backbone.W_out")), leaf("backbone.b_out"));
}

void Backbone::bind_weights(TensorMap& inputs) const {
  for (const auto& [name, t] : w_)
    if (name != "backbone.e_null") inputs[name] = t;
}

Tensor Backbone::velocity_batch(const Tensor& z, const Tensor& t_col, const Tensor& context) const {
  if (context.rank() != 2 || context.rows() != cfg_.context_tokens ||
      context.cols() != cfg_.context_dim)
    throw std::invalid_argument("velocity: context shape " + context.shape_str() + " != [" +
                                std::to_string(cfg_.context_tokens) + "x" +
                                std::to_string(cfg_.context_dim) + "]");
  Graph g;
  NodeId zi = g.input("z");
  NodeId ti = g.input("t");
  NodeId ci = g.input("ctx");
  NodeId out = build_velocity(g, zi, ti, ci);
  TensorMap in;
  bind_weights(in);
  in["z"] = z;
  in["t"] = t_col;
  in["ctx"] = context;
  Tensor result = g.forward(out, in);
  evals_.fetch_add(1, std::memory_order_relaxed);
  return result;
}

Tensor Backbone::velocity(const Tensor& z, double t, const Tensor& context) const {
  const bool flat = z.rank() == 1;
  Tensor zm = z.row_matrix();
  Tensor result = velocity_batch(zm, Tensor::full({zm.rows(), 1}, t), context);
  return flat ? result.flatten() : result;
}

Tensor Backbone::clean_prediction(const Tensor& z, double t, const Tensor& context) const {
  Tensor v = velocity(z, t, context);
  return lincomb(1.0, z, -t, v);
}

PretrainResult pretrain(const BackboneConfig& cfg, const Tokenizer& tok, const TextEncoder& te) {
  cfg.validate();
  if (cfg.input_dim != cfg.side * cfg.side)
    throw std::invalid_argument("pretrain: input_dim must equal side*side");
  Backbone net = Backbone::random_init(cfg, tok, te);
  const Tensor e_null = net.null_context();

  static constexpr ShapeClass kClasses[] = {ShapeClass::Disk, ShapeClass::Bar, ShapeClass::Cross};
  static const char* kClassText[] = {"DISK", "BAR", "CROSS"};
  Tensor class_ctx[3];
  for (int c = 0; c < 3; ++c)
    class_ctx[c] = te.encode(tok.embed(kClassText[c], cfg.context_tokens));

  Graph g;
  NodeId z = g.input("z");
  NodeId t = g.input("t");
  NodeId ctx = g.input("ctx");
  NodeId target = g.input("target");
  NodeId v = net.build_velocity(g, z, t, ctx, /*weights_trainable=*/true);
  NodeId loss = g.mse(v, target);

  OptimizerState opt;
  opt.learning_rate = cfg.pretrain_lr;

  TensorMap params;
  for (const auto& [name, w] : net.weights())
    if (name != "backbone.e_null") params[name] = w;

  Rng rng(hash_combine(cfg.seed, 0x9e7a11));
  const int n = cfg.input_dim;
  const int b = cfg.pretrain_batch;
  std::vector<double> curve;
  curve.reserve(static_cast<std::size_t>(cfg.pretrain_steps));

  for (int step = 0; step < cfg.pretrain_steps; ++step) {
    const int cls = step % 3;
    CleanSpec spec;
    spec.side = cfg.side;
    spec.shape = kClasses[cls];
    spec.seed = rng.raw();
    std::vector<Tensor> batch = generate_clean(spec, b);
    Tensor zt({b, n}), tcol({b, 1}), tgt({b, n});
    for (int i = 0; i < b; ++i) {
      const double ti = rng.uniform();
      tcol.at(i, 0) = ti;
      for (int j = 0; j < n; ++j) {
        const double z0 = batch[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        const double eps = rng.normal();
        zt.at(i, j) = (1.0 - ti) * z0 + ti * eps;
        tgt.at(i, j) = eps - z0;
      }
    }
    TensorMap in = params;
    in["z"] = zt;
    in["t"] = tcol;
    in["ctx"] = rng.uniform() < 0.5 ? e_null : class_ctx[cls];
    in["target"] = tgt;
    const double l = g.forward(loss, in)[0];
    if (!std::isfinite(l))
      throw std::runtime_error("pretrain: loss diverged at step " + std::to_string(step));
    curve.push_back(l);
    TensorMap grads = g.backward(Tensor({1, 1}, {1.0}));
    optimizer_step(params, grads, opt);
  }

  for (auto& [name, w] : net.mutable_weights())
    if (name != "backbone.e_null") w = params.at(name);
  net.freeze();
  return PretrainResult{std::move(net), std::move(curve)};
}

}  // namespace bp
