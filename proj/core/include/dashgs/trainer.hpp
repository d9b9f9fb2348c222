#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dashgs/adam.hpp"
#include "dashgs/image.hpp"
#include "dashgs/schedule.hpp"
#include "dashgs/splat2d.hpp"

namespace dashgs::train {

enum class SchedulerMode { kDash, kNone };

const char* to_string(SchedulerMode mode);
SchedulerMode scheduler_mode_from_string(const std::string& name);

struct TrainConfig {
  int iters = 2000;
  int p_init = 200;
  int densify_interval = 100;
  int densify_start = 100;
  /// Negative selects 0.8 * iters.
  int densify_stop = -1;
  double grad_threshold = 1e-3;
  double prune_opacity = 0.005;
  double split_scale_threshold = 0.01;
  /// Position rate in normalized units per step; 1e-2 is about one pixel of
  /// a 128-pixel image.
  splat::LearningRates lr{};
  double position_lr_final = 1e-4;
  SchedulerMode mode = SchedulerMode::kDash;
  schedule::ScheduleOptions schedule{};
  double gamma = 0.98;
  double eta = 1.0;
  splat::RenderOptions render{};

  /// Copy with densify_stop materialized.
  TrainConfig resolved() const;
  /// Throws InputError on out-of-range fields.
  void validate() const;
};

struct IterRecord {
  int iter = 0;
  int r_floored = 1;
  std::int64_t n_primitives = 0;
  std::int64_t pixels = 0;
  double loss = 0.0;
};

struct DensifyEvent {
  int iter = 0;  // iterations completed when the event ran
  std::int64_t before = 0;
  std::int64_t pruned = 0;
  std::int64_t candidates = 0;
  std::int64_t selected = 0;
  std::int64_t after = 0;
  /// Primitive target; -1 when uncapped.
  std::int64_t p_target = -1;
  double p_fin = 0.0;
};

struct RunMetrics {
  std::vector<IterRecord> iterations;
  std::vector<DensifyEvent> events;
  std::int64_t total_pixels = 0;
  std::int64_t total_pixel_primitive_cost = 0;
  double wall_ms = 0.0;
  /// +infinity for a perfect fit.
  double psnr_full = 0.0;
  std::int64_t final_primitives = 0;
};

/// Running mean of positional-gradient magnitude per primitive, counting
/// only iterations where the primitive touched a sample.
class ScoreAccumulator {
 public:
  explicit ScoreAccumulator(std::size_t primitives = 0) { reset(primitives); }

  void reset(std::size_t primitives);
  void add(std::span<const double> grad_norm, std::span<const std::uint8_t> visible);
  std::size_t size() const { return sum_.size(); }
  std::vector<double> scores() const;
  std::span<const std::int64_t> counts() const { return count_; }

 private:
  std::vector<double> sum_;
  std::vector<std::int64_t> count_;
};

struct DensifyParams {
  double grad_threshold = 1e-3;
  double prune_opacity = 0.005;
  double split_scale_threshold = 0.01;
};

struct DensifyResult {
  splat::SplatModel model;
  /// For each output primitive, the input index whose optimizer moments it
  /// inherits, or -1 for fresh zero moments.
  std::vector<std::ptrdiff_t> origin;
  std::int64_t pruned = 0;
  std::int64_t survivors = 0;   // N'
  std::int64_t candidates = 0;  // P_add
  std::int64_t selected = 0;
  std::int64_t cloned = 0;
  std::int64_t split = 0;
};

/// Prune by opacity, filter by score, keep the top min(|candidates|,
/// max(0, p_target - N')) candidates (all of them when p_target is empty),
/// then clone or split each by size. Clones keep the original in place and
/// append a jittered copy; splits remove the parent and append two children.
/// New primitives follow the survivors, ordered by parent index. At least one
/// primitive always survives pruning.
DensifyResult densify(const splat::SplatModel& model, std::span<const double> scores,
                      std::optional<std::int64_t> p_target, const DensifyParams& params, std::mt19937_64& rng);

/// Indices of the top-k candidates: score >= threshold, highest score
/// first, ties by lower index.
std::vector<std::size_t> select_top(std::span<const double> scores, std::span<const std::uint8_t> eligible,
                                    double threshold, std::size_t k);

/// lr0 before the first full-resolution iteration k*, then exponential decay
/// reaching lr_final at iteration S.
double positional_lr(int k, const schedule::ResolutionSchedule& schedule, double lr0, double lr_final);

/// Anti-aliased ground truth at every factor; factor 1 is the original.
std::map<int, Image> gt_pyramid(const Image& target, std::span<const int> factors);

/// 10 log10(1 / MSE); +infinity for identical images.
double psnr(const Image& a, const Image& b);

/// Builds the schedule used by train() for this target and config.
schedule::ResolutionSchedule make_schedule(const Image& target, const TrainConfig& config);

struct TrainResult {
  splat::SplatModel model;
  RunMetrics metrics;
};

/// Called after every iteration with the record just appended.
using Progress = std::function<void(const IterRecord&)>;

TrainResult train(const Image& target, const TrainConfig& config, std::uint64_t seed, const Progress& progress = {});

}  // namespace dashgs::train
