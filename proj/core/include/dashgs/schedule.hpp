#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dashgs/image.hpp"
#include "dashgs/spectra.hpp"

namespace dashgs::schedule {

/// How switch iterations are derived from level significances.
enum class FractionMode {
  kLog,     ///< s_i = S * ln(X_i / X_m) / ln(X / X_m); the default
  kLinear,  ///< s_i = S * X_i / X (unmodulated fraction, ablation only)
};

/// Where the final interpolation segment lands.
enum class Anchor {
  kEnd,        ///< factor r_i at s_{r_i}; the last segment reaches 1 at S
  kLastLevel,  ///< as kEnd, but the segment ending at s_{r_1} reaches 1 there
};

const char* to_string(FractionMode mode);
const char* to_string(Anchor anchor);
FractionMode fraction_mode_from_string(const std::string& name);
Anchor anchor_from_string(const std::string& name);

struct ScheduleOptions {
  double a = 4.0;
  int levels = 8;
  spectra::Measure measure = spectra::Measure::kBandLimited;
  FractionMode fraction = FractionMode::kLog;
  Anchor anchor = Anchor::kEnd;
  /// Smallest admissible render extent (pixels per side) at the largest factor.
  int min_render_extent = 8;
};

/// Largest factor with round(min(H, W) / r) >= min_extent.
double factor_cap(Extent extent, int min_extent = 8);

/// Result of matching X(F_r) = X(F) / a.
struct MaxFactor {
  double factor = 1.0;
  double target = 0.0;
  double achieved = 0.0;
  /// False when even the capped factor keeps more than the target.
  bool target_reached = true;
  /// The image admits no factor > 1; `factor` is 1.
  bool too_small = false;
};

/// Bisection over the continuous factor in [1, cap] for the factor whose
/// significance is closest to `target`. Relies on significance being
/// non-increasing in the factor.
double solve_factor(const spectra::SignificanceProbe& probe, double target, double cap);

/// Throws InputError when a <= 1.
MaxFactor solve_max_factor(const spectra::SignificanceProbe& probe, double a, int min_extent = 8);

/// Levels 1..m stored at index i-1: factors ascend toward r_m, sigs descend
/// toward X(F)/a. sigs are the linearly sampled targets; achieved holds the
/// probe value at each solved factor.
struct LevelSet {
  double a = 4.0;
  double full = 0.0;
  std::vector<double> factors;
  std::vector<double> sigs;
  std::vector<double> achieved;
  bool target_reached = true;

  int size() const { return static_cast<int>(factors.size()); }
  double max_factor() const { return factors.back(); }
  double min_sig() const { return sigs.back(); }
};

/// Solves r_m, then r_1..r_{m-1} for targets X - (i/m)(X - X/a). Throws
/// InputError for m < 1, a <= 1 or images too small to downsample, and
/// NumericError for an all-zero view set.
LevelSet build_levels(const spectra::SignificanceProbe& probe, double a, int m, int min_extent = 8);

/// (x_full - x_r) / x_full. Throws InputError unless x_full >= x_r > 0.
double fraction_linear(double x_full, double x_r);

/// ln(x_full / x_ri) / ln(x_full / x_rm).
double fraction_log(double x_full, double x_rm, double x_ri);

/// S * (1 - fraction_log(x_full, x_rm, x_ri)); equals S at x_ri = x_full
/// and 0 at x_ri = x_rm.
double switch_iteration(double x_full, double x_rm, double x_ri, int total_iters);

/// s_{r_i} = S * ln(X_i / X_m) / ln(X / X_m), real valued, s_{r_m} = 0.
/// Index i-1 holds level i.
std::vector<double> switch_iterations(const LevelSet& levels, int total_iters);

/// s_{r_i} = S * X_i / X.
std::vector<double> switch_iterations_linear(const LevelSet& levels, int total_iters);

/// Inverse-square interpolation of the factor at iteration k.
double resolution_at(const LevelSet& levels, std::span<const double> switch_iters, int total_iters, Anchor anchor,
                     int k);

/// floor(r); throws InputError for r < 1.
int floored_resolution(double r);

/// P_i = p_init + (p_fin - p_init) / r^(2 - i/S), rounded to nearest.
std::int64_t primitive_target(int i, double r, int total_iters, double p_init, double p_fin);

/// Precomputed per-iteration rendering schedule.
class ResolutionSchedule {
 public:
  ResolutionSchedule(LevelSet levels, int total_iters, FractionMode fraction = FractionMode::kLog,
                     Anchor anchor = Anchor::kEnd);

  /// Every iteration at full resolution (unscheduled baseline).
  static ResolutionSchedule constant(int total_iters);

  /// Probe the views and build the schedule in one go.
  static ResolutionSchedule from_views(std::span<const Image> views, int total_iters, const ScheduleOptions& options);

  int total_iters() const { return total_iters_; }
  const LevelSet& levels() const { return levels_; }
  std::span<const double> switch_iters() const { return switch_iters_; }

  double continuous(int k) const;
  /// floor of continuous(k), except the final iteration which is always 1.
  int floored(int k) const;

  /// First iteration with floored factor 1 (k* of the learning-rate schedule).
  int first_full_resolution_iter() const;
  /// First iteration whose floored factor is <= factor; 0 if none exceeds it.
  int first_iter_at_or_below(int factor) const;
  /// Distinct floored factors, largest first.
  std::vector<int> distinct_floored() const;

  Extent render_extent(Extent full, int k) const;

 private:
  ResolutionSchedule() = default;
  void check_iter(int k) const;

  LevelSet levels_;
  int total_iters_ = 0;
  std::vector<double> switch_iters_;
  std::vector<double> continuous_;
  std::vector<int> floored_;
};

/// Momentum budget for the final primitive count.
struct BudgetState {
  double gamma = 0.98;
  double eta = 1.0;
  double p_fin = 0.0;
  double p_init = 0.0;
};

/// p_fin starts at 5 * p_init. Throws InputError for p_init < 1, gamma
/// outside (0, 1) or eta <= 0.
BudgetState initial_budget(double p_init, double gamma = 0.98, double eta = 1.0);

/// p_fin <- max(p_fin, gamma * p_fin + eta * p_add).
BudgetState budget_update(const BudgetState& state, double p_add);

/// eta / (1 - gamma) * p_add, the fixed point of budget_update.
double steady_state_budget(double gamma, double eta, double p_add);

}  // namespace dashgs::schedule
