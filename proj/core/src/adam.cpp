#include "dashgs/adam.hpp"

#include <cmath>

#include "dashgs/error.hpp"

namespace dashgs::splat {

double LearningRates::for_group(ParamGroup group) const {
  switch (group) {
    case ParamGroup::kPosition: return position;
    case ParamGroup::kScale: return scale;
    case ParamGroup::kRotation: return rotation;
    case ParamGroup::kOpacity: return opacity;
    case ParamGroup::kColor: return color;
  }
  return 0.0;
}

AdamState::AdamState(std::size_t primitives) : first_(primitives), second_(primitives) {}

void AdamState::remap(std::span<const std::ptrdiff_t> origin) {
  std::vector<Gaussian2D> first(origin.size());
  std::vector<Gaussian2D> second(origin.size());
  for (std::size_t j = 0; j < origin.size(); ++j) {
    std::ptrdiff_t o = origin[j];
    if (o < 0) continue;
    if (static_cast<std::size_t>(o) >= first_.size()) throw InputError("moment remap index out of range");
    first[j] = first_[static_cast<std::size_t>(o)];
    second[j] = second_[static_cast<std::size_t>(o)];
  }
  first_ = std::move(first);
  second_ = std::move(second);
}

void adam_step(SplatModel& model, AdamState& state, std::span<const Gaussian2D> grads, const LearningRates& rates,
               const AdamConfig& config) {
  if (grads.size() != model.size() || state.size() != model.size()) {
    throw InputError("gradient and optimizer state must match the model size");
  }
  ++state.step_;
  const double t = static_cast<double>(state.step_);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  std::array<double, kParamCount> lr{};
  for (int k = 0; k < kParamCount; ++k) lr[k] = rates.for_group(group_of(k));

  for (std::size_t i = 0; i < model.size(); ++i) {
    Gaussian2D& p = model.primitives[i];
    Gaussian2D& m = state.first_[i];
    Gaussian2D& v = state.second_[i];
    for (int k = 0; k < kParamCount; ++k) {
      double g = param(grads[i], k);
      double& mk = param(m, k);
      double& vk = param(v, k);
      mk = config.beta1 * mk + (1.0 - config.beta1) * g;
      vk = config.beta2 * vk + (1.0 - config.beta2) * g * g;
      double mhat = mk / c1;
      double vhat = vk / c2;
      param(p, k) -= lr[k] * mhat / (std::sqrt(vhat) + config.epsilon);
    }
  }
}

}  // namespace dashgs::splat
