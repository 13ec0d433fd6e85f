#pragma once

#include <string>

#include "bp/tensor.hpp"

namespace bp {

// The three training/inference state families. Every construction emits a
// state of the form (1-sigma)*signal + sigma*eps where sigma is the noise
// coefficient handed to the backbone as its time input.

enum class Trajectory { Naive, Ddbm, Ebr };

const char* trajectory_name(Trajectory t);
Trajectory trajectory_from_name(const std::string& name);

// (1-t)*z_deg + t*eps, t in [0,1]. Signal stays anchored at the degraded
// latent; inference states drift away from this family, which is the
// mismatch the bridge constructions repair.
Tensor naive_state(const Tensor& z_deg, double t, const Tensor& eps);

// Endpoint-pinned bridge with Brownian-bridge coefficients
//   a_t = t, b_t = 1-t, s_t = eta*sqrt(t(1-t)).
// Clean endpoint at t=0, degraded endpoint at t=1, variance peaked in the
// interior and zero at both ends.
struct DdbmSchedule {
  double eta = 1.0;

  double a(double t) const { return t; }
  double b(double t) const { return 1.0 - t; }
  double s(double t) const;
};

// sigma = s/(1+s); satisfies (1-sigma)*s == sigma, which rewrites the
// bridge sample into the (1-sigma)*signal + sigma*eps form the backbone
// was trained on.
double ddbm_sigma(double s);

struct DdbmState {
  Tensor y;       // the reparameterized bridge state
  double sigma;   // noise coefficient to feed the backbone as time
};

DdbmState ddbm_state(const Tensor& z_clean, const Tensor& z_deg, double t, const Tensor& eps,
                     const DdbmSchedule& schedule);

// Monotone bridge: starts (t=T0) at the noisy degraded input and denoises
// toward clean as the signal mixes toward z_clean.
//   state = (1-t)*[(1-t/T0)*z_clean + (t/T0)*z_deg] + t*eps,  t in [0,T0].
struct EbrSchedule {
  double t0 = 0.4;

  void validate() const;
  double lambda(double t) const { return t / t0; }
};

Tensor ebr_state(const Tensor& z_clean, const Tensor& z_deg, double t, const Tensor& eps,
                 const EbrSchedule& schedule);

}  // namespace bp
