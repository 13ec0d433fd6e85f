#include "bp/bridges.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bp {

namespace {
void require_shapes(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(what) + ": shape mismatch " + a.shape_str() + " vs " +
                                b.shape_str());
}
}  // namespace

const char* trajectory_name(Trajectory t) {
  switch (t) {
    case Trajectory::Naive: return "naive";
    case Trajectory::Ddbm: return "ddbm";
    case Trajectory::Ebr: return "ebr";
  }
  return "?";
}

Trajectory trajectory_from_name(const std::string& name) {
  if (name == "naive") return Trajectory::Naive;
  if (name == "ddbm") return Trajectory::Ddbm;
  if (name == "ebr") return Trajectory::Ebr;
  throw std::invalid_argument("unknown trajectory '" + name + "' (expected naive, ddbm or ebr)");
}

Tensor naive_state(const Tensor& z_deg, double t, const Tensor& eps) {
  if (!(t >= 0.0 && t <= 1.0))
    throw std::invalid_argument("naive_state: t must be in [0,1], got " + std::to_string(t));
  require_shapes(z_deg, eps, "naive_state");
  return lincomb(1.0 - t, z_deg, t, eps);
}

double DdbmSchedule::s(double t) const {
  if (!(t >= 0.0 && t <= 1.0))
    throw std::invalid_argument("DdbmSchedule: t must be in [0,1], got " + std::to_string(t));
  return eta * std::sqrt(t * (1.0 - t));
}

double ddbm_sigma(double s) {
  if (!(s >= 0.0)) throw std::invalid_argument("ddbm_sigma: s must be >= 0, got " + std::to_string(s));
  return s / (1.0 + s);
}

DdbmState ddbm_state(const Tensor& z_clean, const Tensor& z_deg, double t, const Tensor& eps,
                     const DdbmSchedule& schedule) {
  require_shapes(z_clean, z_deg, "ddbm_state");
  require_shapes(z_clean, eps, "ddbm_state");
  const double a = schedule.a(t);
  const double b = schedule.b(t);
  const double sigma = ddbm_sigma(schedule.s(t));
  Tensor y(z_clean.shape());
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = (1.0 - sigma) * (a * z_deg[i] + b * z_clean[i]) + sigma * eps[i];
  y.require_finite("ddbm_state");
  return {std::move(y), sigma};
}

void EbrSchedule::validate() const {
  if (!(t0 > 0.0 && t0 <= 1.0))
    throw std::invalid_argument("EbrSchedule: T0 must be in (0,1], got " + std::to_string(t0));
}

Tensor ebr_state(const Tensor& z_clean, const Tensor& z_deg, double t, const Tensor& eps,
                 const EbrSchedule& schedule) {
  schedule.validate();
  if (!(t >= 0.0 && t <= schedule.t0))
    throw std::invalid_argument("ebr_state: t must be in [0," + std::to_string(schedule.t0) +
                                "], got " + std::to_string(t));
  require_shapes(z_clean, z_deg, "ebr_state");
  require_shapes(z_clean, eps, "ebr_state");
  const double lam = schedule.lambda(t);
  Tensor out(z_clean.shape());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = (1.0 - t) * ((1.0 - lam) * z_clean[i] + lam * z_deg[i]) + t * eps[i];
  out.require_finite("ebr_state");
  return out;
}

}  // namespace bp
