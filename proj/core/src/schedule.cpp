#include "dashgs/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dashgs/error.hpp"

namespace dashgs::schedule {
namespace {

constexpr int kBisectionSteps = 200;
constexpr double kBisectionWidth = 1e-10;

void check_total_iters(int total_iters) {
  if (total_iters < 1) throw InputError("total iterations must be >= 1");
}

void check_a(double a) {
  if (!(a > 1.0) || !std::isfinite(a)) throw InputError("significance ratio a must be > 1, got " + std::to_string(a));
}

}  // namespace

const char* to_string(FractionMode mode) { return mode == FractionMode::kLog ? "log" : "linear"; }

const char* to_string(Anchor anchor) { return anchor == Anchor::kEnd ? "end" : "last-level"; }

FractionMode fraction_mode_from_string(const std::string& name) {
  if (name == "log") return FractionMode::kLog;
  if (name == "linear") return FractionMode::kLinear;
  throw InputError("unknown fraction mode '" + name + "' (expected log or linear)");
}

Anchor anchor_from_string(const std::string& name) {
  if (name == "end") return Anchor::kEnd;
  if (name == "last-level") return Anchor::kLastLevel;
  throw InputError("unknown anchor '" + name + "' (expected end or last-level)");
}

double factor_cap(Extent extent, int min_extent) {
  if (min_extent < 2) throw InputError("minimum render extent must be >= 2");
  return static_cast<double>(std::min(extent.height, extent.width)) / min_extent;
}

double solve_factor(const spectra::SignificanceProbe& probe, double target, double cap) {
  double lo = 1.0;
  double hi = cap;
  if (probe(hi) >= target) return hi;
  for (int step = 0; step < kBisectionSteps && hi - lo > kBisectionWidth; ++step) {
    const double mid = 0.5 * (lo + hi);
    if (probe(mid) >= target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::abs(probe(lo) - target) <= std::abs(probe(hi) - target) ? lo : hi;
}

MaxFactor solve_max_factor(const spectra::SignificanceProbe& probe, double a, int min_extent) {
  check_a(a);
  MaxFactor result;
  result.target = probe.full() / a;
  const double cap = factor_cap(probe.extent(), min_extent);
  if (cap <= 1.0) {
    result.factor = 1.0;
    result.achieved = probe.full();
    result.target_reached = false;
    result.too_small = true;
    return result;
  }
  result.factor = solve_factor(probe, result.target, cap);
  result.achieved = probe(result.factor);
  result.target_reached = result.achieved <= result.target || result.factor < cap;
  return result;
}

LevelSet build_levels(const spectra::SignificanceProbe& probe, double a, int m, int min_extent) {
  check_a(a);
  if (m < 1) throw InputError("level count must be >= 1");
  if (!(probe.full() > 0.0)) throw NumericError("views carry no spectral energy (all-zero images)");

  const MaxFactor top = solve_max_factor(probe, a, min_extent);
  if (top.too_small) {
    throw InputError("views of " + std::to_string(probe.extent().height) + "x" + std::to_string(probe.extent().width) +
                     " are too small to admit any downsampling factor");
  }

  LevelSet levels;
  levels.a = a;
  levels.full = probe.full();
  levels.target_reached = top.target_reached;
  levels.factors.resize(m);
  levels.sigs.resize(m);
  levels.achieved.resize(m);

  const double full = probe.full();
  const double cap = factor_cap(probe.extent(), min_extent);
  for (int i = 1; i <= m; ++i) {
    const bool last = i == m;
    const double target = last ? top.target : full - (static_cast<double>(i) / m) * (full - top.target);
    const double factor = last ? top.factor : solve_factor(probe, target, cap);
    levels.sigs[i - 1] = target;
    levels.factors[i - 1] = factor;
  }
  // Clamping inside the resampled measure can make it very slightly
  // non-monotone; keep the factors ordered so the curve stays monotone.
  for (int i = m - 2; i >= 0; --i) levels.factors[i] = std::min(levels.factors[i], levels.factors[i + 1]);
  for (int i = 0; i < m; ++i) levels.achieved[i] = probe(levels.factors[i]);
  return levels;
}

double fraction_linear(double x_full, double x_r) {
  if (!(x_r > 0.0) || !(x_full >= x_r)) {
    throw InputError("fraction_linear requires x_full >= x_r > 0");
  }
  return (x_full - x_r) / x_full;
}

double fraction_log(double x_full, double x_rm, double x_ri) {
  if (!(x_rm > 0.0) || !(x_ri >= x_rm) || !(x_full > x_rm)) {
    throw InputError("fraction_log requires x_full > x_rm > 0 and x_ri >= x_rm");
  }
  return std::log(x_full / x_ri) / std::log(x_full / x_rm);
}

double switch_iteration(double x_full, double x_rm, double x_ri, int total_iters) {
  check_total_iters(total_iters);
  return total_iters * (1.0 - fraction_log(x_full, x_rm, x_ri));
}

std::vector<double> switch_iterations(const LevelSet& levels, int total_iters) {
  check_total_iters(total_iters);
  const int m = levels.size();
  if (m < 1 || static_cast<int>(levels.sigs.size()) != m) throw InputError("level set is empty or inconsistent");
  const double x_m = levels.min_sig();
  if (!(x_m > 0.0) || !(levels.full > x_m)) throw InputError("significance ratios must be positive");
  for (int i = 0; i + 1 < m; ++i) {
    if (!(levels.sigs[i] > levels.sigs[i + 1])) throw InputError("level significances must strictly decrease");
  }
  if (!(levels.full > levels.sigs.front()) && m > 1) throw InputError("level significances must lie below X(F)");

  std::vector<double> out(m);
  for (int i = 0; i < m; ++i) out[i] = switch_iteration(levels.full, x_m, levels.sigs[i], total_iters);
  out[m - 1] = 0.0;
  return out;
}

std::vector<double> switch_iterations_linear(const LevelSet& levels, int total_iters) {
  check_total_iters(total_iters);
  const int m = levels.size();
  if (m < 1) throw InputError("level set is empty");
  std::vector<double> out(m);
  for (int i = 0; i < m; ++i) out[i] = total_iters * (1.0 - fraction_linear(levels.full, levels.sigs[i]));
  return out;
}

double resolution_at(const LevelSet& levels, std::span<const double> switch_iters, int total_iters, Anchor anchor,
                     int k) {
  if (k < 0 || k >= total_iters) {
    throw InputError("iteration " + std::to_string(k) + " outside [0, " + std::to_string(total_iters) + ")");
  }
  const int m = levels.size();
  if (m == 0) return 1.0;

  // Breakpoints (iteration, factor) in increasing iteration order.
  struct Breakpoint {
    double iter;
    double factor;
  };
  std::vector<Breakpoint> points;
  points.reserve(m + 1);
  for (int i = m; i >= 1; --i) {
    const double factor = anchor == Anchor::kLastLevel && i == 1 ? 1.0 : levels.factors[i - 1];
    points.push_back({switch_iters[i - 1], factor});
  }
  points.push_back({static_cast<double>(total_iters), 1.0});

  const double t = k + 0.5;
  if (t < points.front().iter) return points.front().factor;
  std::size_t j = 0;
  while (j + 2 < points.size() && t >= points[j + 1].iter) ++j;

  const Breakpoint& from = points[j];
  const Breakpoint& to = points[j + 1];
  const double span = to.iter - from.iter;
  const double u = span > 0.0 ? std::clamp((k - from.iter) / span, 0.0, 1.0) : 1.0;
  const double inv_sq = (1.0 - u) / (from.factor * from.factor) + u / (to.factor * to.factor);
  return 1.0 / std::sqrt(inv_sq);
}

int floored_resolution(double r) {
  if (!(r >= 1.0)) throw InputError("resolution factor must be >= 1, got " + std::to_string(r));
  return static_cast<int>(std::floor(r));
}

std::int64_t primitive_target(int i, double r, int total_iters, double p_init, double p_fin) {
  check_total_iters(total_iters);
  if (i < 0 || i > total_iters) throw InputError("iteration outside [0, S]");
  if (!(r >= 1.0)) throw InputError("resolution factor must be >= 1");
  if (!(p_init >= 1.0)) throw InputError("p_init must be >= 1");
  if (!(p_fin >= p_init)) throw InputError("p_fin must be >= p_init");
  const double exponent = 2.0 - static_cast<double>(i) / total_iters;
  return std::llround(p_init + (p_fin - p_init) / std::pow(r, exponent));
}

ResolutionSchedule::ResolutionSchedule(LevelSet levels, int total_iters, FractionMode fraction, Anchor anchor)
    : levels_(std::move(levels)), total_iters_(total_iters) {
  check_total_iters(total_iters);
  if (levels_.size() > 0) {
    switch_iters_ = fraction == FractionMode::kLog ? switch_iterations(levels_, total_iters)
                                                   : switch_iterations_linear(levels_, total_iters);
  }
  continuous_.resize(total_iters);
  floored_.resize(total_iters);
  for (int k = 0; k < total_iters; ++k) {
    continuous_[k] = resolution_at(levels_, switch_iters_, total_iters, anchor, k);
    floored_[k] = floored_resolution(continuous_[k]);
  }
  floored_.back() = 1;
}

ResolutionSchedule ResolutionSchedule::constant(int total_iters) {
  check_total_iters(total_iters);
  ResolutionSchedule out;
  out.total_iters_ = total_iters;
  out.continuous_.assign(total_iters, 1.0);
  out.floored_.assign(total_iters, 1);
  return out;
}

ResolutionSchedule ResolutionSchedule::from_views(std::span<const Image> views, int total_iters,
                                                  const ScheduleOptions& options) {
  check_total_iters(total_iters);
  if (total_iters < options.levels) throw InputError("total iterations must be >= the level count");
  const spectra::SignificanceProbe probe(views, options.measure);
  return ResolutionSchedule(build_levels(probe, options.a, options.levels, options.min_render_extent), total_iters,
                            options.fraction, options.anchor);
}

void ResolutionSchedule::check_iter(int k) const {
  if (k < 0 || k >= total_iters_) {
    throw InputError("iteration " + std::to_string(k) + " outside [0, " + std::to_string(total_iters_) + ")");
  }
}

double ResolutionSchedule::continuous(int k) const {
  check_iter(k);
  return continuous_[k];
}

int ResolutionSchedule::floored(int k) const {
  check_iter(k);
  return floored_[k];
}

int ResolutionSchedule::first_full_resolution_iter() const { return first_iter_at_or_below(1); }

int ResolutionSchedule::first_iter_at_or_below(int factor) const {
  const auto it = std::find_if(floored_.begin(), floored_.end(), [factor](int f) { return f <= factor; });
  return static_cast<int>(it - floored_.begin());
}

std::vector<int> ResolutionSchedule::distinct_floored() const {
  std::vector<int> out(floored_.begin(), floored_.end());
  std::sort(out.begin(), out.end(), std::greater<>());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Extent ResolutionSchedule::render_extent(Extent full, int k) const {
  return spectra::downsampled_extent(full, floored(k));
}

BudgetState initial_budget(double p_init, double gamma, double eta) {
  if (!(p_init >= 1.0)) throw InputError("p_init must be >= 1");
  if (!(gamma > 0.0 && gamma < 1.0)) throw InputError("gamma must lie in (0, 1)");
  if (!(eta > 0.0)) throw InputError("eta must be > 0");
  return {gamma, eta, 5.0 * p_init, p_init};
}

BudgetState budget_update(const BudgetState& state, double p_add) {
  if (!(p_add >= 0.0)) throw InputError("p_add must be >= 0");
  BudgetState next = state;
  next.p_fin = std::max(state.p_fin, state.gamma * state.p_fin + state.eta * p_add);
  return next;
}

double steady_state_budget(double gamma, double eta, double p_add) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw InputError("gamma must lie in (0, 1)");
  if (!(eta > 0.0)) throw InputError("eta must be > 0");
  return eta / (1.0 - gamma) * p_add;
}

}  // namespace dashgs::schedule
