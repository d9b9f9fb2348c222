#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dashgs/splat2d.hpp"

namespace dashgs::splat {

struct LearningRates {
  double position = 1e-2;
  double scale = 5e-3;
  double rotation = 5e-3;
  double opacity = 5e-2;
  double color = 1e-2;

  double for_group(ParamGroup group) const;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First and second moments per primitive parameter, plus the shared step
/// counter used for bias correction.
class AdamState {
 public:
  explicit AdamState(std::size_t primitives = 0);

  std::size_t size() const { return first_.size(); }
  std::int64_t step() const { return step_; }

  /// Rebuilds the moments after densification: entry j takes the moments of
  /// old primitive origin[j], or zeros when origin[j] < 0.
  void remap(std::span<const std::ptrdiff_t> origin);

  const std::vector<Gaussian2D>& first_moment() const { return first_; }
  const std::vector<Gaussian2D>& second_moment() const { return second_; }

  friend void adam_step(SplatModel& model, AdamState& state, std::span<const Gaussian2D> grads,
                        const LearningRates& rates, const AdamConfig& config);

 private:
  std::vector<Gaussian2D> first_;
  std::vector<Gaussian2D> second_;
  std::int64_t step_ = 0;
};

/// One bias-corrected Adam update with per-group learning rates. Throws
/// InputError when the gradient or state shape differs from the model.
void adam_step(SplatModel& model, AdamState& state, std::span<const Gaussian2D> grads, const LearningRates& rates,
               const AdamConfig& config = {});

}  // namespace dashgs::splat
