#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bp/backbone.hpp"
#include "bp/bridges.hpp"
#include "bp/optim.hpp"
#include "bp/prompts.hpp"

namespace bp {

struct TrainConfig {
  Trajectory trajectory = Trajectory::Ebr;
  PromptVariant variant = PromptVariant::EmbeddingSpace;
  DegradationKind kind = DegradationKind::Veil;
  int iterations = 3000;
  int batch_size = 2;
  double learning_rate = 5e-4;
  double weight_decay = 0.0;
  double t0 = 0.4;    // EBR max noising level
  double eta = 1.0;   // DDBM noise scale
  int dataset_size = 64;
  std::uint64_t seed = 11;

  void validate() const;
  double max_time() const;  // t0 for EBR, 1 otherwise
};

struct TrainReport {
  std::vector<double> loss_curve;
  Prompt final_prompt;
  double wall_seconds = 0.0;
  std::uint64_t backbone_hash_before = 0;
  std::uint64_t backbone_hash_after = 0;
  std::uint64_t encoder_hash_before = 0;
  std::uint64_t encoder_hash_after = 0;
};

// Clean-endpoint prediction loss against the frozen backbone: the mean
// over the batch of |zhat0(state_i, time_i; context) - z_clean_i|^2 with
// (state_i, time_i) drawn from the trajectory's state family at ts[i]
// with noise eps[i]. Returns the batch loss; per-parameter gradients go
// through PromptTrainer.
//
// Reusable across iterations: the graph is built once per
// (trajectory, variant, backbone) combination.
class PromptTrainer {
 public:
  PromptTrainer(Trajectory trajectory, const Prompt& prototype, const Backbone& backbone,
                const Tokenizer& tok, const TextEncoder& te, double t0 = 0.4, double eta = 1.0);

  double loss(std::span<const PairedSample* const> batch, std::span<const double> ts,
              std::span<const Tensor> eps, const TensorMap& prompt_params);
  TensorMap gradients();  // of the last loss w.r.t. the prompt parameters

 private:
  const Backbone& backbone_;
  const Tokenizer& tok_;
  const TextEncoder& te_;
  Trajectory trajectory_;
  Prompt prototype_;
  EbrSchedule ebr_;
  DdbmSchedule ddbm_;
  Graph graph_;
  NodeId loss_node_ = -1;
  TensorMap static_inputs_;
};

// One-shot evaluation with explicit timesteps and noises (deterministic,
// used by tests and the loss-gradient checks).
double prompt_loss(Trajectory trajectory, const std::vector<PairedSample>& batch,
                   const Prompt& prompt, const Backbone& backbone, const Tokenizer& tok,
                   const TextEncoder& te, std::span<const double> ts, std::span<const Tensor> eps,
                   double t0 = 0.4, double eta = 1.0);

// Optimizes the prompt for config.kind on the given paired dataset and
// stores the result in the bank. The backbone and text encoder must come
// out hash-identical or the run aborts.
TrainReport train_prompt(const TrainConfig& config, PromptBank& bank, const Backbone& backbone,
                         const Tokenizer& tok, const TextEncoder& te,
                         const std::vector<PairedSample>& dataset);

// Builds the prompt prototype for a config (initial parameter values).
Prompt make_prompt_for(const TrainConfig& config, const Backbone& backbone, const Tokenizer& tok);

}  // namespace bp
