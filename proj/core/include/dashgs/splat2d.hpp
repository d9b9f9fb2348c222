#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "dashgs/image.hpp"

namespace dashgs::splat {

double logistic(double x);
double logit(double p);

/// One anisotropic 2D Gaussian in normalized [0,1]^2 scene coordinates.
/// Covariance R diag(exp(2 log_scale)) R^T is SPD by construction; opacity
/// and color pass through the logistic function.
struct Gaussian2D {
  std::array<double, 2> pos{};
  std::array<double, 2> log_scale{};
  double rotation = 0.0;
  double opacity_raw = 0.0;
  std::array<double, 3> color_raw{};

  double opacity() const { return logistic(opacity_raw); }
  std::array<double, 3> color() const;
  double max_scale() const;

  friend bool operator==(const Gaussian2D&, const Gaussian2D&) = default;
};

/// Flat parameter view used by the optimizer and gradient checks:
/// [px, py, ls0, ls1, rot, op, r, g, b].
inline constexpr int kParamCount = 9;

enum class ParamGroup { kPosition, kScale, kRotation, kOpacity, kColor };

ParamGroup group_of(int param);
double& param(Gaussian2D& g, int index);
double param(const Gaussian2D& g, int index);

/// Primitives in compositing order (creation order). The order is part of
/// the model: permuting it changes the image.
struct SplatModel {
  std::vector<Gaussian2D> primitives;

  std::size_t size() const { return primitives.size(); }
  friend bool operator==(const SplatModel&, const SplatModel&) = default;
};

/// Per-sample weights are clamped so transmittance never reaches zero.
inline constexpr double kMaxWeight = 0.999;

struct RenderOptions {
  /// Bin primitives into tiles by their support box. Binning only skips
  /// samples the support test would reject anyway, so on and off render
  /// identically.
  bool culling = true;
  /// Each Gaussian contributes only where its Mahalanobis distance is at most
  /// support_sigma. Infinity gives the untruncated kernel.
  double support_sigma = 3.0;
  int tile_size = 16;
  /// 0 selects worker_count().
  int workers = 0;
};

/// Front-to-back alpha compositing in primitive order over a black
/// background, sampled at pixel centres of a width x height grid. Returns an
/// RGB image.
Image render(const SplatModel& model, int width, int height, const RenderOptions& options = {});

struct LossGrad {
  double loss = 0.0;
  /// d loss / d parameter, laid out like the primitives.
  std::vector<Gaussian2D> grads;
  /// |d loss / d pos| per primitive, in normalized units.
  std::vector<double> pos_grad_norm;
  /// Primitive touched at least one sample inside its support.
  std::vector<std::uint8_t> visible;
};

/// Mean absolute error between render(model, width, height) and an RGB
/// target, with analytic gradients for every parameter. The L1 subgradient
/// at zero residual is zero. Per-primitive sums are reduced in fixed tile
/// order, so results do not depend on the worker count.
LossGrad render_loss_grad(const SplatModel& model, const Image& target, int width, int height,
                          const RenderOptions& options = {});

/// p_init primitives at stratified random positions, colored by the target
/// pixel beneath each one, isotropic sigma 1/sqrt(p_init), opacity 0.1.
SplatModel init_from_image(const Image& target, int p_init, std::uint64_t seed);

/// Uniform double in [0, 1) from 53 random bits; identical on every platform.
double unit_uniform(std::uint64_t bits);

}  // namespace dashgs::splat
