#include "dashgs/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "dashgs/error.hpp"
#include "dashgs/spectra.hpp"

namespace dashgs::train {

const char* to_string(SchedulerMode mode) { return mode == SchedulerMode::kDash ? "dash" : "none"; }

SchedulerMode scheduler_mode_from_string(const std::string& name) {
  if (name == "dash") return SchedulerMode::kDash;
  if (name == "none") return SchedulerMode::kNone;
  throw InputError("unknown scheduler mode '" + name + "' (expected dash or none)");
}

TrainConfig TrainConfig::resolved() const {
  TrainConfig c = *this;
  if (c.densify_stop < 0) c.densify_stop = static_cast<int>(std::lround(0.8 * c.iters));
  return c;
}

void TrainConfig::validate() const {
  TrainConfig c = resolved();
  if (c.iters < 1) throw InputError("iters must be at least 1");
  if (c.p_init < 1) throw InputError("p_init must be at least 1");
  if (c.densify_interval < 1) throw InputError("densify_interval must be at least 1");
  if (c.densify_start < 0) throw InputError("densify_start must be non-negative");
  if (c.densify_stop > c.iters) throw InputError("densify_stop must not exceed iters");
  if (!(c.prune_opacity > 0.0 && c.prune_opacity < 1.0)) throw InputError("prune_opacity must lie in (0, 1)");
  if (!(c.grad_threshold >= 0.0)) throw InputError("grad_threshold must be non-negative");
  if (!(c.split_scale_threshold > 0.0)) throw InputError("split_scale_threshold must be positive");
  const splat::LearningRates& lr = c.lr;
  for (double v : {lr.position, lr.scale, lr.rotation, lr.opacity, lr.color, c.position_lr_final}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InputError("learning rates must be positive");
  }
  if (!(c.gamma > 0.0 && c.gamma < 1.0)) throw InputError("gamma must lie in (0, 1)");
  if (!(c.eta > 0.0)) throw InputError("eta must be positive");
}

void ScoreAccumulator::reset(std::size_t primitives) {
  sum_.assign(primitives, 0.0);
  count_.assign(primitives, 0);
}

void ScoreAccumulator::add(std::span<const double> grad_norm, std::span<const std::uint8_t> visible) {
  if (grad_norm.size() != sum_.size() || visible.size() != sum_.size()) {
    throw InputError("score update does not match the primitive count");
  }
  for (std::size_t i = 0; i < sum_.size(); ++i) {
    if (!visible[i]) continue;
    sum_[i] += grad_norm[i];
    ++count_[i];
  }
}

std::vector<double> ScoreAccumulator::scores() const {
  std::vector<double> out(sum_.size(), 0.0);
  for (std::size_t i = 0; i < sum_.size(); ++i) {
    if (count_[i] > 0) out[i] = sum_[i] / static_cast<double>(count_[i]);
  }
  return out;
}

std::vector<std::size_t> select_top(std::span<const double> scores, std::span<const std::uint8_t> eligible,
                                    double threshold, std::size_t k) {
  std::vector<std::size_t> cand;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (eligible[i] && scores[i] >= threshold) cand.push_back(i);
  }
  k = std::min(k, cand.size());
  auto better = [&](std::size_t a, std::size_t b) { return scores[a] != scores[b] ? scores[a] > scores[b] : a < b; };
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end(), better);
  cand.resize(k);
  return cand;
}

DensifyResult densify(const splat::SplatModel& model, std::span<const double> scores,
                      std::optional<std::int64_t> p_target, const DensifyParams& params, std::mt19937_64& rng) {
  const std::size_t n = model.size();
  if (scores.size() != n) throw InputError("scores must match the primitive count");
  if (n == 0) throw InputError("cannot densify an empty model");

  std::vector<std::uint8_t> alive(n, 1);
  std::size_t survivors = 0;
  for (std::size_t i = 0; i < n; ++i) {
    alive[i] = model.primitives[i].opacity() >= params.prune_opacity;
    survivors += alive[i];
  }
  if (survivors == 0) {
    std::size_t keep = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (model.primitives[i].opacity_raw > model.primitives[keep].opacity_raw) keep = i;
    }
    alive[keep] = 1;
    survivors = 1;
  }

  DensifyResult out;
  out.pruned = static_cast<std::int64_t>(n - survivors);
  out.survivors = static_cast<std::int64_t>(survivors);
  for (std::size_t i = 0; i < n; ++i) {
    out.candidates += (alive[i] && scores[i] >= params.grad_threshold) ? 1 : 0;
  }

  std::size_t k = static_cast<std::size_t>(out.candidates);
  if (p_target) {
    std::int64_t room = std::max<std::int64_t>(0, *p_target) - out.survivors;
    k = std::min<std::size_t>(k, static_cast<std::size_t>(std::max<std::int64_t>(0, room)));
  }
  std::vector<std::size_t> chosen = select_top(scores, alive, params.grad_threshold, k);
  std::sort(chosen.begin(), chosen.end());
  out.selected = static_cast<std::int64_t>(chosen.size());

  std::vector<std::uint8_t> splits(n, 0);
  for (std::size_t i : chosen) splits[i] = model.primitives[i].max_scale() >= params.split_scale_threshold;

  for (std::size_t i = 0; i < n; ++i) {
    if (!alive[i] || splits[i]) continue;
    out.model.primitives.push_back(model.primitives[i]);
    out.origin.push_back(static_cast<std::ptrdiff_t>(i));
  }
  const double shrink = std::log(1.6);
  for (std::size_t i : chosen) {
    const splat::Gaussian2D& g = model.primitives[i];
    if (!splits[i]) {
      splat::Gaussian2D copy = g;
      double jitter = 0.1 * g.max_scale();
      copy.pos[0] += jitter * (2.0 * splat::unit_uniform(rng()) - 1.0);
      copy.pos[1] += jitter * (2.0 * splat::unit_uniform(rng()) - 1.0);
      out.model.primitives.push_back(copy);
      out.origin.push_back(-1);
      ++out.cloned;
      continue;
    }
    int major = g.log_scale[0] >= g.log_scale[1] ? 0 : 1;
    double sigma = std::exp(g.log_scale[major]);
    double cs = std::cos(g.rotation);
    double sn = std::sin(g.rotation);
    // Local axis 0 is (cos, sin), axis 1 is (-sin, cos).
    double ax = major == 0 ? cs : -sn;
    double ay = major == 0 ? sn : cs;
    for (double side : {-0.5, 0.5}) {
      splat::Gaussian2D child = g;
      child.pos[0] += side * sigma * ax;
      child.pos[1] += side * sigma * ay;
      child.log_scale[0] -= shrink;
      child.log_scale[1] -= shrink;
      out.model.primitives.push_back(child);
      out.origin.push_back(-1);
    }
    ++out.split;
  }
  return out;
}

double positional_lr(int k, const schedule::ResolutionSchedule& schedule, double lr0, double lr_final) {
  const int total = schedule.total_iters();
  const int k_star = schedule.first_full_resolution_iter();
  if (k < k_star) return lr0;
  if (k >= total) return lr_final;
  double t = static_cast<double>(k - k_star) / static_cast<double>(total - k_star);
  return lr0 * std::pow(lr_final / lr0, t);
}

std::map<int, Image> gt_pyramid(const Image& target, std::span<const int> factors) {
  std::map<int, Image> out;
  for (int f : factors) {
    if (f < 1) throw InputError("pyramid factors must be at least 1");
    if (out.contains(f)) continue;
    out.emplace(f, f == 1 ? target : spectra::antialias_downsample(target, static_cast<double>(f)));
  }
  return out;
}

double psnr(const Image& a, const Image& b) {
  if (a.height() != b.height() || a.width() != b.width() || a.channels() != b.channels()) {
    throw InputError("psnr requires images of equal shape");
  }
  auto da = a.data();
  auto db = b.data();
  if (da.empty()) throw InputError("psnr of empty images");
  double sum = 0.0;
  for (std::size_t i = 0; i < da.size(); ++i) {
    double d = da[i] - db[i];
    sum += d * d;
  }
  double mse = sum / static_cast<double>(da.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

schedule::ResolutionSchedule make_schedule(const Image& target, const TrainConfig& config) {
  if (config.mode == SchedulerMode::kNone) return schedule::ResolutionSchedule::constant(config.iters);
  std::vector<Image> views{target};
  return schedule::ResolutionSchedule::from_views(views, config.iters, config.schedule);
}

TrainResult train(const Image& target, const TrainConfig& config_in, std::uint64_t seed, const Progress& progress) {
  const auto start = std::chrono::steady_clock::now();
  config_in.validate();
  const TrainConfig config = config_in.resolved();
  if (target.empty()) throw InputError("empty target image");
  require_finite(target, "target");
  const Image rgb = to_rgb(target);
  const bool dash = config.mode == SchedulerMode::kDash;

  const schedule::ResolutionSchedule sched = make_schedule(rgb, config);
  const std::vector<int> factors = sched.distinct_floored();
  const std::map<int, Image> pyramid = gt_pyramid(rgb, factors);

  splat::SplatModel model = splat::init_from_image(rgb, config.p_init, seed);
  splat::AdamState adam(model.size());
  ScoreAccumulator scores(model.size());
  schedule::BudgetState budget = schedule::initial_budget(config.p_init, config.gamma, config.eta);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  const DensifyParams dparams{config.grad_threshold, config.prune_opacity, config.split_scale_threshold};

  TrainResult result;
  RunMetrics& metrics = result.metrics;
  metrics.iterations.reserve(static_cast<std::size_t>(config.iters));
  splat::LearningRates rates = config.lr;

  for (int k = 0; k < config.iters; ++k) {
    const int r = sched.floored(k);
    const Image& gt = pyramid.at(r);
    rates.position = positional_lr(k, sched, config.lr.position, config.position_lr_final);

    splat::LossGrad lg = splat::render_loss_grad(model, gt, gt.width(), gt.height(), config.render);
    IterRecord rec;
    rec.iter = k;
    rec.r_floored = r;
    rec.n_primitives = static_cast<std::int64_t>(model.size());
    rec.pixels = static_cast<std::int64_t>(gt.extent().pixels());
    rec.loss = lg.loss;
    metrics.total_pixels += rec.pixels;
    metrics.total_pixel_primitive_cost += rec.pixels * rec.n_primitives;
    metrics.iterations.push_back(rec);

    splat::adam_step(model, adam, lg.grads, rates);
    scores.add(lg.pos_grad_norm, lg.visible);

    const int done = k + 1;
    if (done < config.iters && done >= config.densify_start && done <= config.densify_stop &&
        done % config.densify_interval == 0) {
      DensifyEvent ev;
      ev.iter = done;
      ev.before = static_cast<std::int64_t>(model.size());
      std::optional<std::int64_t> p_target;
      if (dash) {
        p_target = schedule::primitive_target(done, static_cast<double>(sched.floored(done)), config.iters,
                                              config.p_init, budget.p_fin);
        ev.p_target = *p_target;
      }
      DensifyResult d = densify(model, scores.scores(), p_target, dparams, rng);
      if (dash) budget = schedule::budget_update(budget, static_cast<double>(d.candidates));
      ev.pruned = d.pruned;
      ev.candidates = d.candidates;
      ev.selected = d.selected;
      ev.after = static_cast<std::int64_t>(d.model.size());
      ev.p_fin = budget.p_fin;
      metrics.events.push_back(ev);
      adam.remap(d.origin);
      model = std::move(d.model);
      scores.reset(model.size());
    }
    if (progress) progress(rec);
  }

  Image final_render = splat::render(model, rgb.width(), rgb.height(), config.render);
  metrics.psnr_full = psnr(final_render, rgb);
  metrics.final_primitives = static_cast<std::int64_t>(model.size());
  metrics.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  result.model = std::move(model);
  return result;
}

}  // namespace dashgs::train
