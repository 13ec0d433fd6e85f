#include "bp/sampler.hpp"

#include <cmath>
#include <stdexcept>

namespace bp {

void SamplerConfig::validate() const {
  if (steps < 1) throw std::invalid_argument("SamplerConfig: steps must be >= 1");
  if (!(t0 > 0.0 && t0 <= 1.0)) throw std::invalid_argument("SamplerConfig: T0 must be in (0,1]");
  if (!(naive_start > 0.0 && naive_start <= 1.0))
    throw std::invalid_argument("SamplerConfig: naive_start must be in (0,1]");
  if (!(ddbm_start > 0.0 && ddbm_start < 1.0))
    throw std::invalid_argument("SamplerConfig: ddbm_start must be in (0,1)");
}

double SamplerConfig::max_time() const {
  switch (trajectory) {
    case Trajectory::Naive: return naive_start;
    case Trajectory::Ddbm: return ddbm_start;
    case Trajectory::Ebr: return t0;
  }
  return 1.0;
}

std::vector<double> time_grid(const SamplerConfig& config) {
  config.validate();
  const double tmax = config.max_time();
  std::vector<double> grid(static_cast<std::size_t>(config.steps) + 1);
  for (int i = 0; i <= config.steps; ++i) {
    // ratio first so the grid starts at exactly tmax
    const double ratio =
        static_cast<double>(config.steps - i) / static_cast<double>(config.steps);
    grid[static_cast<std::size_t>(i)] = tmax * ratio;
  }
  grid.back() = 0.0;
  return grid;
}

namespace {

void check_grid(const std::vector<double>& grid, double tmax) {
  if (grid.size() < 2) throw std::invalid_argument("sampler: grid needs at least 2 points");
  if (grid.front() > tmax + 1e-12)
    throw std::invalid_argument("sampler: grid starts above the trajectory's max time");
  if (grid.back() != 0.0) throw std::invalid_argument("sampler: grid must end at 0");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] < grid[i - 1]))
      throw std::invalid_argument("sampler: grid must be strictly decreasing");
}

void record(RestoreTrace* trace, double t, const Tensor& x) {
  if (!trace) return;
  trace->times.push_back(t);
  trace->states.push_back(x);
}

}  // namespace

Tensor restore_core_naive(const Tensor& z_deg, const VelocityFn& velocity,
                          const std::vector<double>& grid, Rng& rng, RestoreTrace* trace) {
  check_grid(grid, 1.0);
  Tensor x = naive_state(z_deg, grid.front(), rng.normal_tensor(z_deg.shape()));
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double t = grid[i];
    const double t_next = grid[i + 1];
    record(trace, t, x);
    Tensor v = velocity(x, t);
    x = lincomb(1.0, x, -(t - t_next), v);  // Euler on dx/dt = -v
  }
  return x;
}

Tensor restore_core_ebr(const Tensor& z_deg, const VelocityFn& velocity,
                        const std::vector<double>& grid, double t0, Rng& rng,
                        RestoreTrace* trace) {
  check_grid(grid, t0);
  const double t_start = grid.front();
  // the t=T0 state needs no clean endpoint: (1-t)*z_deg + t*eps
  Tensor eps = rng.normal_tensor(z_deg.shape());
  Tensor x = lincomb(1.0 - t_start, z_deg, t_start, eps);
  Tensor z_hat;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double t = grid[i];
    const double t_next = grid[i + 1];
    if (t <= 0.0) throw std::invalid_argument("restore_ebr: interior grid time must be positive");
    record(trace, t, x);
    Tensor v = velocity(x, t);
    z_hat = lincomb(1.0, x, -t, v);  // clean prediction
    // implied noise from the bridge form, then re-bridge at t_next
    const double lam = t / t0;
    Tensor mix = lincomb((1.0 - t) * (1.0 - lam), z_hat, (1.0 - t) * lam, z_deg);
    Tensor eps_hat = scale(sub(x, mix), 1.0 / t);
    const double lam_next = t_next / t0;
    Tensor mix_next =
        lincomb((1.0 - t_next) * (1.0 - lam_next), z_hat, (1.0 - t_next) * lam_next, z_deg);
    x = lincomb(1.0, mix_next, t_next, eps_hat);
  }
  return z_hat;  // t_next = 0 collapses x to the last clean prediction
}

Tensor restore_core_ddbm(const Tensor& z_deg, const VelocityFn& velocity,
                         const std::vector<double>& grid, const DdbmSchedule& schedule, Rng& rng,
                         RestoreTrace* trace) {
  check_grid(grid, 1.0);
  const double t_start = grid.front();
  // The clean endpoint is unknown at inference; substitute z_deg for it in
  // the start state. The weight of that term is b(t_start), so the bias
  // vanishes as t_start -> 1.
  const double sigma_start = ddbm_sigma(schedule.s(t_start));
  Tensor eps = rng.normal_tensor(z_deg.shape());
  Tensor y = lincomb(1.0 - sigma_start, z_deg, sigma_start, eps);
  Tensor z_hat;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double t = grid[i];
    const double t_next = grid[i + 1];
    const double sigma = ddbm_sigma(schedule.s(t));
    if (sigma <= 0.0)
      throw std::invalid_argument("restore_ddbm: sigma is zero at an interior step");
    record(trace, t, y);
    Tensor v = velocity(y, sigma);  // the backbone's time input is sigma
    z_hat = lincomb(1.0, y, -sigma, v);
    Tensor mean = lincomb(schedule.a(t), z_deg, schedule.b(t), z_hat);
    Tensor eps_hat = scale(lincomb(1.0, y, -(1.0 - sigma), mean), 1.0 / sigma);
    const double sigma_next = ddbm_sigma(schedule.s(t_next));
    Tensor mean_next = lincomb(schedule.a(t_next), z_deg, schedule.b(t_next), z_hat);
    y = lincomb(1.0 - sigma_next, mean_next, sigma_next, eps_hat);
  }
  return z_hat;  // at t=0: a=0, b=1, sigma=0, so y collapses to z_hat
}

Tensor mix_velocities(const std::vector<Tensor>& contexts, const Backbone& backbone,
                      const Tensor& x, double time) {
  if (contexts.empty()) throw std::invalid_argument("mix_velocities: empty context list");
  Tensor sum = backbone.velocity(x, time, contexts[0]);
  for (std::size_t k = 1; k < contexts.size(); ++k)
    sum = add(sum, backbone.velocity(x, time, contexts[k]));
  return scale(sum, 1.0 / static_cast<double>(contexts.size()));
}

Tensor restore_with_contexts(const Tensor& z_deg, const std::vector<Tensor>& contexts,
                             const Backbone& backbone, const SamplerConfig& config,
                             RestoreTrace* trace) {
  config.validate();
  if (contexts.empty()) throw std::invalid_argument("restore: empty context list");
  VelocityFn vfn = [&](const Tensor& x, double time) {
    return mix_velocities(contexts, backbone, x, time);
  };
  std::vector<double> grid = time_grid(config);
  Rng rng(hash_combine(config.seed, 0x5a));
  switch (config.trajectory) {
    case Trajectory::Naive: return restore_core_naive(z_deg, vfn, grid, rng, trace);
    case Trajectory::Ebr: return restore_core_ebr(z_deg, vfn, grid, config.t0, rng, trace);
    case Trajectory::Ddbm: {
      DdbmSchedule schedule{config.eta};
      return restore_core_ddbm(z_deg, vfn, grid, schedule, rng, trace);
    }
  }
  throw std::invalid_argument("restore: unknown trajectory");
}

Tensor restore(const Tensor& z_deg, const std::vector<const Prompt*>& prompts,
               const Backbone& backbone, const Tokenizer& tok, const TextEncoder& te,
               const SamplerConfig& config, RestoreTrace* trace) {
  if (prompts.empty()) throw std::invalid_argument("restore: empty prompt list");
  std::vector<Tensor> contexts;
  contexts.reserve(prompts.size());
  for (const Prompt* p : prompts)
    contexts.push_back(encode_prompt(*p, tok, te, backbone.null_context()));
  return restore_with_contexts(z_deg, contexts, backbone, config, trace);
}

namespace {
Tensor restore_single(const Tensor& z_deg, const Prompt& prompt, const Backbone& backbone,
                      const Tokenizer& tok, const TextEncoder& te, const SamplerConfig& config,
                      Trajectory expected) {
  if (config.trajectory != expected)
    throw std::invalid_argument("restore: config trajectory does not match entry point");
  return restore(z_deg, {&prompt}, backbone, tok, te, config);
}
}  // namespace

Tensor restore_naive(const Tensor& z_deg, const Prompt& prompt, const Backbone& backbone,
                     const Tokenizer& tok, const TextEncoder& te, const SamplerConfig& config) {
  return restore_single(z_deg, prompt, backbone, tok, te, config, Trajectory::Naive);
}

Tensor restore_ebr(const Tensor& z_deg, const Prompt& prompt, const Backbone& backbone,
                   const Tokenizer& tok, const TextEncoder& te, const SamplerConfig& config) {
  return restore_single(z_deg, prompt, backbone, tok, te, config, Trajectory::Ebr);
}

Tensor restore_ddbm(const Tensor& z_deg, const Prompt& prompt, const Backbone& backbone,
                    const Tokenizer& tok, const TextEncoder& te, const SamplerConfig& config) {
  return restore_single(z_deg, prompt, backbone, tok, te, config, Trajectory::Ddbm);
}

}  // namespace bp
