#pragma once

#include <atomic>
#include <cstdint>
#include <vector>

#include "bp/graph.hpp"
#include "bp/prompts.hpp"
#include "bp/toyworld.hpp"

namespace bp {

struct BackboneConfig {
  int input_dim = 256;   // flattened latent size (side*side)
  int side = 16;         // image side for pretraining data
  int hidden_dim = 128;
  int hidden_layers = 1;  // relu layers after the attention block
  int context_tokens = 8;   // L
  int context_dim = 32;     // D; must match the prompt module's D
  int time_dim = 32;
  int attn_dim = 32;
  int pretrain_steps = 3000;
  int pretrain_batch = 16;
  double pretrain_lr = 1e-3;
  std::uint64_t seed = 7;

  void validate() const;
};

// The frozen generative prior: an MLP velocity field v(z_t, t; context)
// with a single-head cross-attention block reading the context tokens.
// Queries come from the hidden features, keys/values from the context.
// Once frozen, any weight mutation is an error and the recorded content
// hash must stay unchanged.
class Backbone {
 public:
  Backbone(BackboneConfig cfg, TensorMap weights);
  Backbone(const Backbone& other);
  Backbone(Backbone&& other) noexcept;
  Backbone& operator=(const Backbone& other);
  Backbone& operator=(Backbone&& other) noexcept;

  static Backbone random_init(const BackboneConfig& cfg, const Tokenizer& tok,
                              const TextEncoder& te);

  const BackboneConfig& config() const { return cfg_; }
  const TensorMap& weights() const { return w_; }
  const Tensor& null_context() const { return w_.at("backbone.e_null"); }

  // Content hash over the 32-bit quantization of all weights, so the hash
  // survives a checkpoint round trip.
  std::uint64_t content_hash() const;

  bool frozen() const { return frozen_; }
  void freeze();
  std::uint64_t frozen_hash() const;
  void verify_frozen_hash() const;  // throws if the weights drifted

  TensorMap& mutable_weights();  // error once frozen

  // Velocity field. z may be [N] or [B,N]; t is the scalar noise
  // coefficient fed to the time embedding. Counts one evaluation.
  Tensor velocity(const Tensor& z, double t, const Tensor& context) const;
  // Batched variant with per-row times [B,1].
  Tensor velocity_batch(const Tensor& z, const Tensor& t_col, const Tensor& context) const;

  // z_t - t * velocity(z_t, t; context)
  Tensor clean_prediction(const Tensor& z, double t, const Tensor& context) const;

  // Graph construction; weight leaves are named "backbone.*" and are
  // differentiable only when weights_trainable is set (pretraining).
  NodeId build_velocity(Graph& g, NodeId z, NodeId t, NodeId context,
                        bool weights_trainable = false) const;
  void bind_weights(TensorMap& inputs) const;

  std::uint64_t eval_count() const { return evals_.load(std::memory_order_relaxed); }

 private:
  BackboneConfig cfg_;
  TensorMap w_;
  bool frozen_ = false;
  std::uint64_t frozen_hash_ = 0;
  mutable std::atomic<std::uint64_t> evals_{0};  // NFE counter
};

std::uint64_t quantized_hash(const TensorMap& tensors);

struct PretrainResult {
  Backbone backbone;
  std::vector<double> loss_curve;  // one entry per step
};

// Flow matching on clean toy data: minimize |v((1-t)z0 + t*eps, t; c) -
// (eps - z0)|^2 with t uniform on [0,1]. Contexts alternate 50/50 between
// the null context and the encoded shape-class symbol, so the
// cross-attention pathway is live after freezing.
PretrainResult pretrain(const BackboneConfig& cfg, const Tokenizer& tok, const TextEncoder& te);

}  // namespace bp
