#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "dashgs/checkpoint.hpp"
#include "dashgs/error.hpp"
#include "dashgs/spectra.hpp"
#include "dashgs/trainer.hpp"
#include "oracles/oracles.hpp"

using namespace dashgs;
using namespace dashgs::train;

namespace {

Image texture(int n, std::uint64_t seed) {
  Image noise = oracle::random_image(n, n, 1, seed);
  Image out(n, n, 3);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      for (int c = 0; c < 3; ++c)
        out.at(y, x, c) = 0.45 + 0.3 * std::sin(0.4 * x + c) * std::cos(0.3 * y) + 0.2 * (noise.at(y, x) - 0.5);
  return out;
}

TrainConfig small_config(SchedulerMode mode) {
  TrainConfig c;
  c.mode = mode;
  c.iters = 120;
  c.p_init = 30;
  c.densify_interval = 20;
  c.densify_start = 20;
  c.grad_threshold = 5e-4;
  c.schedule.levels = 4;
  return c;
}

splat::SplatModel random_model(int n, std::mt19937_64& rng) {
  splat::SplatModel m = oracle::random_scene(n, rng());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& g : m.primitives) {
    g.opacity_raw = -7.0 + 9.0 * u(rng);  // some fall under the prune threshold
    double s = std::log(0.002 + 0.03 * u(rng));
    g.log_scale = {s, s + 0.3 * u(rng)};
  }
  return m;
}

}  // namespace

TEST(Config, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.resolved().densify_stop, 1600);
  c.densify_interval = 0;
  EXPECT_THROW(c.validate(), InputError);
  c = TrainConfig{};
  c.prune_opacity = 1.0;
  EXPECT_THROW(c.validate(), InputError);
  c = TrainConfig{};
  c.densify_stop = 5000;
  EXPECT_THROW(c.validate(), InputError);
  EXPECT_EQ(scheduler_mode_from_string("none"), SchedulerMode::kNone);
  EXPECT_THROW(scheduler_mode_from_string("fast"), InputError);
}

TEST(Scores, MeanOverVisibleIterations) {
  ScoreAccumulator acc(3);
  std::vector<double> g1{1.0, 2.0, 3.0}, g2{3.0, 9.0, 1.0};
  std::vector<std::uint8_t> v1{1, 1, 0}, v2{1, 0, 0};
  acc.add(g1, v1);
  acc.add(g2, v2);
  auto s = acc.scores();
  EXPECT_DOUBLE_EQ(s[0], 2.0);
  EXPECT_DOUBLE_EQ(s[1], 2.0);
  EXPECT_EQ(s[2], 0.0);
  EXPECT_EQ(acc.counts()[0], 2);
  acc.reset(5);
  EXPECT_EQ(acc.size(), 5u);
  EXPECT_EQ(acc.scores(), std::vector<double>(5, 0.0));
  std::vector<double> short_g{1.0};
  std::vector<std::uint8_t> short_v{1};
  EXPECT_THROW(acc.add(short_g, short_v), InputError);
}

TEST(Densify, TopKMatchesSortOracle) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> scores(50);
    std::vector<std::uint8_t> ok(50);
    for (int i = 0; i < 50; ++i) {
      scores[i] = std::round(u(rng) * 20) / 20;  // plenty of ties
      ok[i] = u(rng) > 0.2;
    }
    std::size_t k = static_cast<std::size_t>(u(rng) * 60);
    EXPECT_EQ(select_top(scores, ok, 0.3, k), oracle::top_k(scores, ok, 0.3, k));
  }
}

TEST(Densify, SelectionAndBranchesMatchOracle) {
  std::mt19937_64 rng(11);
  splat::SplatModel m = random_model(50, rng);
  std::vector<double> scores(50);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double& s : scores) s = u(rng) * 1e-3;
  DensifyParams p{4e-4, 0.005, 0.01};
  std::vector<std::uint8_t> alive(50);
  std::int64_t survivors = 0;
  for (int i = 0; i < 50; ++i) survivors += alive[i] = m.primitives[i].opacity() >= p.prune_opacity;
  const std::int64_t target = survivors + 7;
  auto expected = oracle::top_k(scores, alive, p.grad_threshold, 7);
  std::sort(expected.begin(), expected.end());

  std::mt19937_64 jitter(1);
  DensifyResult d = densify(m, scores, target, p, jitter);
  EXPECT_EQ(d.survivors, survivors);
  EXPECT_EQ(d.selected, static_cast<std::int64_t>(expected.size()));

  // Survivors that were not split keep their order and moments.
  std::size_t out = 0;
  for (int i = 0; i < 50; ++i) {
    bool chosen = std::binary_search(expected.begin(), expected.end(), static_cast<std::size_t>(i));
    bool split = chosen && m.primitives[i].max_scale() >= p.split_scale_threshold;
    if (!alive[i] || split) continue;
    EXPECT_EQ(d.origin[out], i);
    EXPECT_EQ(d.model.primitives[out], m.primitives[i]);
    ++out;
  }
  // Appended children in parent order: one jittered copy or two split halves.
  for (std::size_t i : expected) {
    const auto& g = m.primitives[i];
    if (g.max_scale() < p.split_scale_threshold) {
      const auto& c = d.model.primitives[out++];
      EXPECT_EQ(c.log_scale, g.log_scale);
      EXPECT_LE(std::abs(c.pos[0] - g.pos[0]), 0.1 * g.max_scale() + 1e-15);
    } else {
      const auto& a = d.model.primitives[out++];
      const auto& b = d.model.primitives[out++];
      EXPECT_NEAR(a.log_scale[0], g.log_scale[0] - std::log(1.6), 1e-12);
      EXPECT_NEAR(0.5 * (a.pos[0] + b.pos[0]), g.pos[0], 1e-12);
      EXPECT_NEAR(std::hypot(a.pos[0] - b.pos[0], a.pos[1] - b.pos[1]), g.max_scale(), 1e-12);
      EXPECT_EQ(a.opacity_raw, g.opacity_raw);
    }
  }
  EXPECT_EQ(out, d.model.size());
  for (std::size_t j = d.model.size() - (d.cloned + 2 * d.split); j < d.model.size(); ++j) EXPECT_EQ(d.origin[j], -1);
}

TEST(Densify, NoCandidatesOnlyPrunes) {
  std::mt19937_64 rng(3);
  splat::SplatModel m = random_model(30, rng);
  std::vector<double> scores(30, 0.0);
  DensifyResult d = densify(m, scores, 1000, DensifyParams{}, rng);
  EXPECT_EQ(d.candidates, 0);
  EXPECT_EQ(static_cast<std::int64_t>(d.model.size()), d.survivors);
}

TEST(Densify, TargetAtOrBelowSurvivorsIsPruneOnly) {
  std::mt19937_64 rng(4);
  splat::SplatModel m = random_model(30, rng);
  std::vector<double> scores(30, 1.0);
  DensifyResult d = densify(m, scores, 3, DensifyParams{}, rng);
  EXPECT_EQ(d.selected, 0);
  EXPECT_EQ(d.candidates, d.survivors);
  DensifyResult neg = densify(m, scores, -10, DensifyParams{}, rng);
  EXPECT_EQ(neg.selected, 0);
}

TEST(Densify, LargeTargetIsNoOpTruncation) {
  std::mt19937_64 rng(6);
  splat::SplatModel m = random_model(30, rng);
  std::vector<double> scores(30);
  for (int i = 0; i < 30; ++i) scores[i] = i * 1e-4;
  DensifyResult capped = densify(m, scores, std::int64_t{1} << 40, DensifyParams{}, rng);
  DensifyResult open = densify(m, scores, std::nullopt, DensifyParams{}, rng);
  EXPECT_EQ(capped.selected, capped.candidates);
  EXPECT_EQ(open.selected, open.candidates);
}

TEST(Densify, KeepsOnePrimitiveWhenAllArePruned) {
  splat::SplatModel m = oracle::random_scene(4, 2);
  for (auto& g : m.primitives) g.opacity_raw = -20.0;
  m.primitives[2].opacity_raw = -19.0;
  std::vector<double> scores(4, 0.0);
  std::mt19937_64 rng(1);
  DensifyResult d = densify(m, scores, 10, DensifyParams{}, rng);
  ASSERT_EQ(d.model.size(), 1u);
  EXPECT_EQ(d.origin[0], 2);
}

TEST(Densify, CountCeilingOverRandomEvents) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int event = 0; event < 200; ++event) {
    int n = 1 + static_cast<int>(u(rng) * 80);
    splat::SplatModel m = random_model(n, rng);
    std::vector<double> scores(n);
    for (double& s : scores) s = u(rng) * 1e-3;
    double p_fin = n + u(rng) * 100;
    std::int64_t target = static_cast<std::int64_t>(u(rng) * p_fin);
    DensifyParams p{u(rng) * 1e-3, 0.005, 0.01};
    DensifyResult d = densify(m, scores, target, p, rng);
    auto after = static_cast<std::int64_t>(d.model.size());
    EXPECT_LE(after, std::max(d.survivors, target));
    EXPECT_LE(after, std::max<std::int64_t>(d.survivors, static_cast<std::int64_t>(p_fin)));
    EXPECT_GE(after, d.survivors);
    EXPECT_EQ(after, d.survivors + d.selected);
    EXPECT_EQ(d.origin.size(), d.model.size());
  }
}

TEST(PositionalLr, HoldsThenDecays) {
  schedule::LevelSet l;
  l.a = 4.0;
  l.full = 4.0;
  l.factors = {2.0, 4.0};
  l.sigs = {2.0, 1.0};
  l.achieved = l.sigs;
  schedule::ResolutionSchedule sched(l, 1000);
  const int k_star = sched.first_full_resolution_iter();
  ASSERT_GT(k_star, 0);
  for (int k = 0; k < k_star; ++k) EXPECT_EQ(positional_lr(k, sched, 1e-3, 1e-5), 1e-3);
  EXPECT_EQ(positional_lr(1000, sched, 1e-3, 1e-5), 1e-5);
  double prev = INFINITY;
  for (int k = 0; k <= 1000; ++k) {
    double lr = positional_lr(k, sched, 1e-3, 1e-5);
    EXPECT_LE(lr, prev);
    prev = lr;
  }
  auto flat = schedule::ResolutionSchedule::constant(100);
  EXPECT_EQ(positional_lr(0, flat, 1e-3, 1e-5), 1e-3);
  EXPECT_LT(positional_lr(1, flat, 1e-3, 1e-5), 1e-3);
}

TEST(Pyramid, LevelsMatchDirectDownsampling) {
  Image target = texture(32, 1);
  std::vector<int> only_one{1};
  auto p1 = gt_pyramid(target, only_one);
  ASSERT_EQ(p1.size(), 1u);
  EXPECT_EQ(p1.at(1), target);
  std::vector<int> factors{4, 2, 1};
  auto p = gt_pyramid(target, factors);
  EXPECT_EQ(p.at(2), spectra::antialias_downsample(target, 2.0));
  EXPECT_EQ(p.at(4), spectra::antialias_downsample(target, 4.0));
  auto c = gt_pyramid(Image(32, 32, 3, 0.4), factors);
  for (double v : c.at(4).data()) EXPECT_NEAR(v, 0.4, 1e-12);
}

TEST(Psnr, ClosedFormsAndOracle) {
  Image a(8, 8, 3, 0.0), b(8, 8, 3, 0.5);
  EXPECT_NEAR(psnr(a, b), 6.0206, 1e-4);
  EXPECT_TRUE(std::isinf(psnr(a, a)));
  Image x = oracle::random_image(13, 11, 3, 1), y = oracle::random_image(13, 11, 3, 2);
  EXPECT_NEAR(psnr(x, y), 10.0 * std::log10(1.0 / oracle::mse(x, y)), 1e-9);
  EXPECT_THROW(psnr(a, Image(8, 8, 1)), InputError);
}

TEST(Train, SingleIterationBaseline) {
  TrainConfig c;
  c.mode = SchedulerMode::kNone;
  c.iters = 1;
  c.p_init = 1;
  TrainResult r = train::train(texture(16, 2), c, 1);
  EXPECT_EQ(r.metrics.iterations.size(), 1u);
  EXPECT_EQ(r.metrics.total_pixels, 256);
  EXPECT_EQ(r.metrics.final_primitives, 1);
}

TEST(Train, DashEndpointsAndCostTally) {
  Image target = texture(48, 3);
  TrainConfig c = small_config(SchedulerMode::kDash);
  TrainResult r = train::train(target, c, 7);
  auto sched = make_schedule(target, c);
  const auto& it = r.metrics.iterations;
  ASSERT_EQ(static_cast<int>(it.size()), c.iters);
  int r0 = sched.floored(0);
  EXPECT_GT(r0, 1);
  EXPECT_EQ(it.front().pixels, spectra::downsampled_extent({48, 48}, r0).pixels());
  EXPECT_EQ(it.back().pixels, 48 * 48);
  std::int64_t pixels = 0, cost = 0;
  for (int k = 0; k < c.iters; ++k) {
    EXPECT_EQ(it[k].r_floored, sched.floored(k));
    pixels += static_cast<std::int64_t>(sched.render_extent({48, 48}, k).pixels());
    cost += it[k].pixels * it[k].n_primitives;
  }
  EXPECT_EQ(r.metrics.total_pixels, pixels);
  EXPECT_EQ(r.metrics.total_pixel_primitive_cost, cost);
  EXPECT_EQ(r.metrics.final_primitives, static_cast<std::int64_t>(r.model.size()));
}

TEST(Train, EventsRespectTargetAndBudget) {
  Image target = texture(48, 4);
  TrainConfig c = small_config(SchedulerMode::kDash);
  c.grad_threshold = 0.0;
  TrainResult r = train::train(target, c, 3);
  ASSERT_FALSE(r.metrics.events.empty());
  double prev_fin = 5.0 * c.p_init;
  for (const auto& e : r.metrics.events) {
    EXPECT_LE(e.after, std::max(e.before - e.pruned, e.p_target));
    EXPECT_LE(e.after, static_cast<std::int64_t>(e.p_fin));
    EXPECT_GE(e.p_fin, prev_fin);
    prev_fin = e.p_fin;
  }
}

TEST(Train, NoCandidatesKeepsInitialBudget) {
  TrainConfig c = small_config(SchedulerMode::kDash);
  c.grad_threshold = std::numeric_limits<double>::infinity();
  TrainResult r = train::train(texture(48, 5), c, 3);
  for (const auto& e : r.metrics.events) {
    EXPECT_EQ(e.p_fin, 5.0 * c.p_init);
    EXPECT_EQ(e.candidates, 0);
  }
}

TEST(Train, BaselineDoesNotTruncate) {
  TrainConfig c = small_config(SchedulerMode::kNone);
  c.grad_threshold = 0.0;
  TrainResult r = train::train(texture(32, 6), c, 3);
  for (const auto& e : r.metrics.events) {
    EXPECT_EQ(e.selected, e.candidates);
    EXPECT_EQ(e.p_target, -1);
  }
  for (const auto& rec : r.metrics.iterations) EXPECT_EQ(rec.r_floored, 1);
}

TEST(Train, Deterministic) {
  Image target = texture(32, 7);
  TrainConfig c = small_config(SchedulerMode::kDash);
  TrainResult a = train::train(target, c, 11);
  c.render.workers = 2;
  TrainResult b = train::train(target, c, 11);
  EXPECT_EQ(splat::checkpoint_text(a.model), splat::checkpoint_text(b.model));
  ASSERT_EQ(a.metrics.iterations.size(), b.metrics.iterations.size());
  for (std::size_t k = 0; k < a.metrics.iterations.size(); ++k) {
    EXPECT_EQ(a.metrics.iterations[k].loss, b.metrics.iterations[k].loss);
    EXPECT_EQ(a.metrics.iterations[k].n_primitives, b.metrics.iterations[k].n_primitives);
  }
}

TEST(Train, LossAfterLowResolutionStageDoesNotRegress) {
  Image target = texture(48, 8);
  TrainConfig c = small_config(SchedulerMode::kDash);
  c.iters = 300;
  TrainResult r = train::train(target, c, 2);
  int k_star = make_schedule(target, c).first_full_resolution_iter();
  ASSERT_LT(k_star, 250);
  double tail = 0.0;
  for (int k = 250; k < 300; ++k) tail += r.metrics.iterations[k].loss;
  EXPECT_LE(tail / 50.0, r.metrics.iterations[k_star].loss);
}

TEST(Train, ScheduleFailureAbortsEarly) {
  TrainConfig c = small_config(SchedulerMode::kDash);
  EXPECT_THROW(train::train(Image(6, 6, 3, 0.5), c, 1), InputError);
  EXPECT_THROW(train::train(Image(32, 32, 3, 0.0), c, 1), NumericError);
}
