#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "bp/backbone.hpp"
#include "bp/bridges.hpp"
#include "bp/prompts.hpp"
#include "bp/rng.hpp"

namespace bp {

// Deterministic reverse samplers matched to the training trajectories.
// Stepping is "implied noise" style: recover eps_hat from the current
// state and the clean prediction, then re-bridge at the next grid time, so
// that accurate predictions keep the visited states inside the training
// family. NFE is exactly steps (single prompt) or steps*K (mixed).
struct SamplerConfig {
  Trajectory trajectory = Trajectory::Ebr;
  int steps = 20;
  double t0 = 0.4;           // EBR grid upper end
  double naive_start = 1.0;  // naive grid upper end (the family's max time)
  double ddbm_start = 0.98;  // interior start; sigma_1 = 0 makes t=1 degenerate
  double eta = 1.0;
  std::uint64_t seed = 13;

  void validate() const;
  double max_time() const;
};

// Strictly decreasing uniform grid from max_time down to 0 (steps+1 points).
std::vector<double> time_grid(const SamplerConfig& config);

struct RestoreTrace {
  std::vector<double> times;
  std::vector<Tensor> states;  // state visited at each grid time > 0
};

// Velocity at (x, time) with the conditioning already applied.
using VelocityFn = std::function<Tensor(const Tensor& x, double time)>;

// Core integrators over an abstract velocity field (tests drive these with
// oracle fields). z_deg and the returned tensor are flat [N].
Tensor restore_core_naive(const Tensor& z_deg, const VelocityFn& velocity,
                          const std::vector<double>& grid, Rng& rng, RestoreTrace* trace = nullptr);
Tensor restore_core_ebr(const Tensor& z_deg, const VelocityFn& velocity,
                        const std::vector<double>& grid, double t0, Rng& rng,
                        RestoreTrace* trace = nullptr);
Tensor restore_core_ddbm(const Tensor& z_deg, const VelocityFn& velocity,
                         const std::vector<double>& grid, const DdbmSchedule& schedule, Rng& rng,
                         RestoreTrace* trace = nullptr);

// Average of the per-prompt velocities at (x, time), contexts fixed.
Tensor mix_velocities(const std::vector<Tensor>& contexts, const Backbone& backbone,
                      const Tensor& x, double time);

// Full restoration: encodes the prompts, builds the mixed velocity field
// and dispatches on config.trajectory. Start noise comes from config.seed.
Tensor restore(const Tensor& z_deg, const std::vector<const Prompt*>& prompts,
               const Backbone& backbone, const Tokenizer& tok, const TextEncoder& te,
               const SamplerConfig& config, RestoreTrace* trace = nullptr);

// Single-trajectory entry points; config.trajectory must agree.
Tensor restore_naive(const Tensor& z_deg, const Prompt& prompt, const Backbone& backbone,
                     const Tokenizer& tok, const TextEncoder& te, const SamplerConfig& config);
Tensor restore_ebr(const Tensor& z_deg, const Prompt& prompt, const Backbone& backbone,
                   const Tokenizer& tok, const TextEncoder& te, const SamplerConfig& config);
Tensor restore_ddbm(const Tensor& z_deg, const Prompt& prompt, const Backbone& backbone,
                    const Tokenizer& tok, const TextEncoder& te, const SamplerConfig& config);

// Restoration against an explicit context matrix (reference path for the
// gate-zero / null-context checks).
Tensor restore_with_contexts(const Tensor& z_deg, const std::vector<Tensor>& contexts,
                             const Backbone& backbone, const SamplerConfig& config,
                             RestoreTrace* trace = nullptr);

}  // namespace bp
