#include "bp/training.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "bp/rng.hpp"

namespace bp {

void TrainConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("TrainConfig: iterations must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (!(t0 > 0.0 && t0 <= 1.0)) throw std::invalid_argument("TrainConfig: T0 must be in (0,1]");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
  if (dataset_size < 1) throw std::invalid_argument("TrainConfig: dataset_size must be >= 1");
  if (variant == PromptVariant::Text)
    throw std::invalid_argument("TrainConfig: text prompts are not trainable");
}

double TrainConfig::max_time() const { return trajectory == Trajectory::Ebr ? t0 : 1.0; }

namespace {

// Builds the per-sample (state, time) rows for one batch.
void fill_states(Trajectory trajectory, std::span<const PairedSample* const> batch,
                 std::span<const double> ts, std::span<const Tensor> eps, const EbrSchedule& ebr,
                 const DdbmSchedule& ddbm, Tensor& state, Tensor& time_col, Tensor& target) {
  const int b = static_cast<int>(batch.size());
  const int n = state.cols();
  for (int i = 0; i < b; ++i) {
    const PairedSample& s = *batch[static_cast<std::size_t>(i)];
    if (static_cast<int>(s.z_clean.size()) != n)
      throw std::invalid_argument("prompt_loss: sample size does not match backbone input dim");
    Tensor st;
    double fed_time = ts[static_cast<std::size_t>(i)];
    switch (trajectory) {
      case Trajectory::Naive:
        st = naive_state(s.z_deg, ts[i], eps[i]);
        break;
      case Trajectory::Ddbm: {
        DdbmState ds = ddbm_state(s.z_clean, s.z_deg, ts[i], eps[i], ddbm);
        st = std::move(ds.y);
        fed_time = ds.sigma;  // the backbone sees the effective noise level
        break;
      }
      case Trajectory::Ebr:
        st = ebr_state(s.z_clean, s.z_deg, ts[i], eps[i], ebr);
        break;
    }
    time_col.at(i, 0) = fed_time;
    for (int j = 0; j < n; ++j) {
      state.at(i, j) = st[static_cast<std::size_t>(j)];
      target.at(i, j) = s.z_clean[static_cast<std::size_t>(j)];
    }
  }
}

}  // namespace

PromptTrainer::PromptTrainer(Trajectory trajectory, const Prompt& prototype,
                             const Backbone& backbone, const Tokenizer& tok, const TextEncoder& te,
                             double t0, double eta)
    : backbone_(backbone), tok_(tok), te_(te), trajectory_(trajectory), prototype_(prototype) {
  ebr_.t0 = t0;
  ebr_.validate();
  ddbm_.eta = eta;
  NodeId state = graph_.input("state");
  NodeId time = graph_.input("time");
  NodeId target = graph_.input("target");
  NodeId ctx = build_context(graph_, prototype_, tok_, te_);
  NodeId v = backbone_.build_velocity(graph_, state, time, ctx, /*weights_trainable=*/false);
  NodeId zhat = graph_.sub(state, graph_.mul(v, time));
  // mse averages over batch*dim entries; rescale so the loss is the mean
  // over the batch of squared L2 norms
  loss_node_ = graph_.scale(graph_.mse(zhat, target), static_cast<double>(backbone.config().input_dim));
  backbone_.bind_weights(static_inputs_);
  bind_context_inputs(static_inputs_, prototype_, tok_, te_, backbone_.null_context());
}

double PromptTrainer::loss(std::span<const PairedSample* const> batch, std::span<const double> ts,
                           std::span<const Tensor> eps, const TensorMap& prompt_params) {
  if (batch.empty()) throw std::invalid_argument("prompt_loss: batch is empty");
  if (ts.size() != batch.size() || eps.size() != batch.size())
    throw std::invalid_argument("prompt_loss: ts/eps size must match batch size");
  for (std::size_t i = 1; i < batch.size(); ++i)
    if (batch[i]->kind != batch[0]->kind)
      throw std::invalid_argument("prompt_loss: batch mixes degradation kinds");
  const int b = static_cast<int>(batch.size());
  const int n = backbone_.config().input_dim;
  Tensor state({b, n}), time_col({b, 1}), target({b, n});
  fill_states(trajectory_, batch, ts, eps, ebr_, ddbm_, state, time_col, target);
  TensorMap inputs = static_inputs_;
  for (const auto& [name, t] : prompt_params) inputs["prompt." + name] = t;
  inputs["state"] = std::move(state);
  inputs["time"] = std::move(time_col);
  inputs["target"] = std::move(target);
  return graph_.forward(loss_node_, inputs)[0];
}

TensorMap PromptTrainer::gradients() {
  TensorMap raw = graph_.backward(Tensor({1, 1}, {1.0}));
  TensorMap out;
  for (auto& [name, g] : raw) {
    // strip the "prompt." prefix so names line up with the prompt's params
    out.emplace(name.substr(7), std::move(g));
  }
  return out;
}

double prompt_loss(Trajectory trajectory, const std::vector<PairedSample>& batch,
                   const Prompt& prompt, const Backbone& backbone, const Tokenizer& tok,
                   const TextEncoder& te, std::span<const double> ts, std::span<const Tensor> eps,
                   double t0, double eta) {
  PromptTrainer trainer(trajectory, prompt, backbone, tok, te, t0, eta);
  std::vector<const PairedSample*> ptrs;
  ptrs.reserve(batch.size());
  for (const auto& s : batch) ptrs.push_back(&s);
  TensorMap params = prompt.variant == PromptVariant::Text ? TensorMap{} : prompt.params;
  return trainer.loss(ptrs, ts, eps, params);
}

Prompt make_prompt_for(const TrainConfig& config, const Backbone& backbone, const Tokenizer& tok) {
  const int l = backbone.config().context_tokens;
  const int d = backbone.config().context_dim;
  switch (config.variant) {
    case PromptVariant::Text:
      return make_text_prompt(config.kind, default_text_for(config.kind));
    case PromptVariant::TokenSpace:
      return make_token_prompt(config.kind, tok, l, default_text_for(config.kind));
    case PromptVariant::EmbeddingSpace:
      return make_embedding_prompt(config.kind, backbone.null_context());
    case PromptVariant::Residual:
      return make_residual_prompt(config.kind, l, d, config.seed);
  }
  throw std::invalid_argument("make_prompt_for: unknown variant");
}

TrainReport train_prompt(const TrainConfig& config, PromptBank& bank, const Backbone& backbone,
                         const Tokenizer& tok, const TextEncoder& te,
                         const std::vector<PairedSample>& dataset) {
  config.validate();
  if (!backbone.frozen()) throw std::logic_error("train_prompt: backbone must be frozen");
  if (dataset.empty()) throw std::invalid_argument("train_prompt: dataset is empty");
  for (const auto& s : dataset)
    if (s.kind != config.kind)
      throw std::invalid_argument("train_prompt: dataset kind does not match config");

  const auto t_start = std::chrono::steady_clock::now();
  TrainReport report;
  report.backbone_hash_before = backbone.content_hash();
  report.encoder_hash_before = te.content_hash();

  Prompt prompt = make_prompt_for(config, backbone, tok);
  PromptTrainer trainer(config.trajectory, prompt, backbone, tok, te, config.t0, config.eta);
  TensorMap& params = trainable_parameters(prompt);

  OptimizerState opt;
  opt.learning_rate = config.learning_rate;
  opt.weight_decay = config.weight_decay;

  Rng rng(hash_combine(config.seed, 0x7a1));
  const double tmax = config.max_time();
  const int b = config.batch_size;
  report.loss_curve.reserve(static_cast<std::size_t>(config.iterations));

  std::vector<const PairedSample*> batch(static_cast<std::size_t>(b));
  std::vector<double> ts(static_cast<std::size_t>(b));
  std::vector<Tensor> eps(static_cast<std::size_t>(b));
  for (int it = 0; it < config.iterations; ++it) {
    for (int i = 0; i < b; ++i) {
      batch[i] = &dataset[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(dataset.size())))];
      ts[i] = rng.uniform(0.0, tmax);
      eps[i] = rng.normal_tensor(batch[i]->z_clean.shape());
    }
    double l;
    try {
      l = trainer.loss(batch, ts, eps, params);
    } catch (const std::exception& e) {
      throw std::runtime_error("train_prompt: aborted at iteration " + std::to_string(it) + ": " +
                               e.what());
    }
    if (!std::isfinite(l))
      throw std::runtime_error("train_prompt: loss is not finite at iteration " +
                               std::to_string(it));
    report.loss_curve.push_back(l);
    optimizer_step(params, trainer.gradients(), opt);
  }

  report.backbone_hash_after = backbone.content_hash();
  report.encoder_hash_after = te.content_hash();
  if (report.backbone_hash_after != report.backbone_hash_before)
    throw std::logic_error("train_prompt: frozen backbone hash changed");
  if (report.encoder_hash_after != report.encoder_hash_before)
    throw std::logic_error("train_prompt: frozen text encoder hash changed");
  backbone.verify_frozen_hash();

  report.final_prompt = prompt;
  bank.put(std::move(prompt));
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return report;
}

}  // namespace bp
