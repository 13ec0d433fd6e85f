#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bp/tensor.hpp"

namespace bp {

enum class ShapeClass { Disk, Bar, Cross };

// Procedural clean images: a soft-edged shape on a dim background, pixel
// values in [0,1], flattened row-major to a rank-1 tensor of side*side.
struct CleanSpec {
  int side = 16;
  ShapeClass shape = ShapeClass::Disk;
  std::uint64_t seed = 0;
};

std::vector<Tensor> generate_clean(const CleanSpec& spec, int n);

enum class DegradationKind { Veil, LowLight, Blur, Stripe };

const char* degradation_name(DegradationKind k);
DegradationKind degradation_from_name(const std::string& name);

// Severity per kind. Each operator maps [0,1] pixels to [0,1] and is
// deterministic given (input, kind, seed). Defaults are deliberately
// severe; T0 = 0.4 is calibrated for severe corruption.
//   veil_alpha in (0,1]: out = alpha*z + (1-alpha);     alpha=1 is identity
//   gamma      in [1,8]: out = z^gamma;                 gamma=1 is identity
//   blur_sigma in (0,4]: gaussian blur, reflect padding
//   stripe_amplitude in [0,1): out = z + a*s*(1-z), s a diagonal stripe
//                              pattern with seed-derived phase
struct DegradationParams {
  double veil_alpha = 0.35;
  double gamma = 2.2;
  double blur_sigma = 1.2;
  double stripe_amplitude = 0.35;
};

Tensor degrade(const Tensor& z_clean, int side, DegradationKind kind,
               const DegradationParams& params, std::uint64_t seed);

// Sequential application, e.g. {Veil, Stripe} for a mixed corruption.
Tensor degrade_mixed(const Tensor& z_clean, int side, const std::vector<DegradationKind>& kinds,
                     const DegradationParams& params, std::uint64_t seed);

struct PairedSample {
  Tensor z_clean;  // flattened, [side*side]
  Tensor z_deg;
  DegradationKind kind;
};

// n pairs cycling through the shape classes. The latent encoder is the
// identity, so the latents are the pixels.
std::vector<PairedSample> make_paired_dataset(int side, DegradationKind kind,
                                              const DegradationParams& params, int n,
                                              std::uint64_t seed);

std::vector<PairedSample> make_mixed_dataset(int side, const std::vector<DegradationKind>& kinds,
                                             const DegradationParams& params, int n,
                                             std::uint64_t seed);

}  // namespace bp
