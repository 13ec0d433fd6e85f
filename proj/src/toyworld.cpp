#include "bp/toyworld.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bp/rng.hpp"

namespace bp {

namespace {

double soft_edge(double signed_dist) {
  // 1 inside, 0 outside, linear ramp of ~1px at the boundary
  return std::clamp(0.5 - signed_dist, 0.0, 1.0);
}

double bar_alpha(double coord, double center, double half_thickness) {
  return soft_edge(std::abs(coord - center) - half_thickness);
}

Tensor render(const CleanSpec& spec, Rng& rng) {
  const int s = spec.side;
  const double bg = rng.uniform(0.05, 0.15);
  const double fg = rng.uniform(0.65, 0.95);
  Tensor img({s * s});
  auto paint = [&](int x, int y, double alpha) {
    img[static_cast<std::size_t>(y) * s + x] = bg + (fg - bg) * alpha;
  };
  switch (spec.shape) {
    case ShapeClass::Disk: {
      const double cx = rng.uniform(0.30, 0.70) * s;
      const double cy = rng.uniform(0.30, 0.70) * s;
      const double r = rng.uniform(0.15, 0.30) * s;
      for (int y = 0; y < s; ++y)
        for (int x = 0; x < s; ++x) {
          const double d = std::hypot(x + 0.5 - cx, y + 0.5 - cy) - r;
          paint(x, y, soft_edge(d));
        }
      break;
    }
    case ShapeClass::Bar: {
      const bool horizontal = rng.uniform() < 0.5;
      const double center = rng.uniform(0.25, 0.75) * s;
      const double half = rng.uniform(1.0, 2.5);
      for (int y = 0; y < s; ++y)
        for (int x = 0; x < s; ++x) {
          const double coord = (horizontal ? y : x) + 0.5;
          paint(x, y, bar_alpha(coord, center, half));
        }
      break;
    }
    case ShapeClass::Cross: {
      const double cx = rng.uniform(0.35, 0.65) * s;
      const double cy = rng.uniform(0.35, 0.65) * s;
      const double half_v = rng.uniform(1.0, 2.0);
      const double half_h = rng.uniform(1.0, 2.0);
      for (int y = 0; y < s; ++y)
        for (int x = 0; x < s; ++x) {
          const double av = bar_alpha(x + 0.5, cx, half_v);
          const double ah = bar_alpha(y + 0.5, cy, half_h);
          paint(x, y, std::max(av, ah));
        }
      break;
    }
  }
  return img;
}

void require_unit_range(const Tensor& z, const char* what) {
  for (std::size_t i = 0; i < z.size(); ++i)
    if (!(z[i] >= 0.0 && z[i] <= 1.0))
      throw std::invalid_argument(std::string(what) + ": pixel values must lie in [0,1]");
}

Tensor blur_reflect(const Tensor& z, int side, double sigma) {
  // separable gaussian, reflect padding (no edge repeat)
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double norm = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    norm += kernel[i + radius];
  }
  for (auto& k : kernel) k /= norm;
  auto reflect = [side](int i) {
    while (i < 0 || i >= side) {
      if (i < 0) i = -i;
      if (i >= side) i = 2 * side - 2 - i;
    }
    return i;
  };
  Tensor tmp({side * side});
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k)
        acc += kernel[k + radius] * z[static_cast<std::size_t>(y) * side + reflect(x + k)];
      tmp[static_cast<std::size_t>(y) * side + x] = acc;
    }
  Tensor out({side * side});
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k)
        acc += kernel[k + radius] * tmp[static_cast<std::size_t>(reflect(y + k)) * side + x];
      out[static_cast<std::size_t>(y) * side + x] = std::clamp(acc, 0.0, 1.0);
    }
  return out;
}

}  // namespace

std::vector<Tensor> generate_clean(const CleanSpec& spec, int n) {
  if (n < 1) throw std::invalid_argument("generate_clean: n must be >= 1");
  if (spec.side < 4) throw std::invalid_argument("generate_clean: side must be >= 4");
  Rng base(spec.seed);
  std::vector<Tensor> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Rng rng = base.fork(static_cast<std::uint64_t>(i));
    out.push_back(render(spec, rng));
  }
  return out;
}

const char* degradation_name(DegradationKind k) {
  switch (k) {
    case DegradationKind::Veil: return "veil";
    case DegradationKind::LowLight: return "lowlight";
    case DegradationKind::Blur: return "blur";
    case DegradationKind::Stripe: return "stripe";
  }
  return "?";
}

DegradationKind degradation_from_name(const std::string& name) {
  if (name == "veil") return DegradationKind::Veil;
  if (name == "lowlight") return DegradationKind::LowLight;
  if (name == "blur") return DegradationKind::Blur;
  if (name == "stripe") return DegradationKind::Stripe;
  throw std::invalid_argument("unknown degradation kind '" + name +
                              "' (expected veil, lowlight, blur or stripe)");
}

Tensor degrade(const Tensor& z_clean, int side, DegradationKind kind,
               const DegradationParams& params, std::uint64_t seed) {
  if (static_cast<int>(z_clean.size()) != side * side)
    throw std::invalid_argument("degrade: tensor size does not match side*side");
  require_unit_range(z_clean, "degrade");
  switch (kind) {
    case DegradationKind::Veil: {
      const double a = params.veil_alpha;
      if (!(a > 0.0 && a <= 1.0)) throw std::invalid_argument("degrade: veil_alpha must be in (0,1]");
      if (a == 1.0) return z_clean;
      Tensor out(z_clean.shape());
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * z_clean[i] + (1.0 - a);
      return out;
    }
    case DegradationKind::LowLight: {
      const double g = params.gamma;
      if (!(g >= 1.0 && g <= 8.0)) throw std::invalid_argument("degrade: gamma must be in [1,8]");
      if (g == 1.0) return z_clean;
      Tensor out(z_clean.shape());
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::pow(z_clean[i], g);
      return out;
    }
    case DegradationKind::Blur: {
      const double s = params.blur_sigma;
      if (!(s > 0.0 && s <= 4.0)) throw std::invalid_argument("degrade: blur_sigma must be in (0,4]");
      return blur_reflect(z_clean, side, s);
    }
    case DegradationKind::Stripe: {
      const double a = params.stripe_amplitude;
      if (!(a >= 0.0 && a < 1.0))
        throw std::invalid_argument("degrade: stripe_amplitude must be in [0,1)");
      Rng rng(hash_combine(seed, 0x5741));
      const double phase = rng.uniform(0.0, 1.0);
      const double period = 4.0;
      Tensor out(z_clean.shape());
      for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
          const double u = (x + y) / period + phase;
          const double sv = std::max(0.0, std::sin(6.283185307179586 * u));
          const double m = a * sv * sv;  // smooth bright streaks
          const std::size_t i = static_cast<std::size_t>(y) * side + x;
          out[i] = z_clean[i] + m * (1.0 - z_clean[i]);
        }
      return out;
    }
  }
  throw std::invalid_argument("degrade: unknown kind");
}

Tensor degrade_mixed(const Tensor& z_clean, int side, const std::vector<DegradationKind>& kinds,
                     const DegradationParams& params, std::uint64_t seed) {
  if (kinds.empty()) throw std::invalid_argument("degrade_mixed: kind list is empty");
  Tensor z = z_clean;
  for (std::size_t i = 0; i < kinds.size(); ++i)
    z = degrade(z, side, kinds[i], params, hash_combine(seed, i));
  return z;
}

std::vector<PairedSample> make_paired_dataset(int side, DegradationKind kind,
                                              const DegradationParams& params, int n,
                                              std::uint64_t seed) {
  return make_mixed_dataset(side, {kind}, params, n, seed);
}

std::vector<PairedSample> make_mixed_dataset(int side, const std::vector<DegradationKind>& kinds,
                                             const DegradationParams& params, int n,
                                             std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("make_paired_dataset: n must be >= 1");
  if (kinds.empty()) throw std::invalid_argument("make_paired_dataset: kind list is empty");
  static constexpr ShapeClass kClasses[] = {ShapeClass::Disk, ShapeClass::Bar, ShapeClass::Cross};
  std::vector<PairedSample> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    CleanSpec spec;
    spec.side = side;
    spec.shape = kClasses[i % 3];
    spec.seed = hash_combine(seed, static_cast<std::uint64_t>(i) * 2 + 1);
    Tensor clean = generate_clean(spec, 1)[0];
    Tensor deg = degrade_mixed(clean, side, kinds, params, hash_combine(seed, i * 2 + 2));
    out.push_back({std::move(clean), std::move(deg), kinds[0]});
  }
  return out;
}

}  // namespace bp
