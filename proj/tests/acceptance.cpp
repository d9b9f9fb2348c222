// End-to-end acceptance suite: one PASS/FAIL line per criterion, exit code 1
// if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "cli/commands.hpp"
#include "dashgs/image_io.hpp"
#include "dashgs/metrics_io.hpp"
#include "dashgs/schedule.hpp"
#include "dashgs/spectra.hpp"
#include "dashgs/splat2d.hpp"
#include "dashgs/trainer.hpp"
#include "oracles/oracles.hpp"

namespace fs = std::filesystem;
using namespace dashgs;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("dashgs_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const std::string kData = DASHGS_DATA_DIR;

Outcome dft_oracle() {
  auto t0 = Clock::now();
  double worst = 0.0;
  for (int n : {8, 16}) {
    Image img = oracle::random_image(n, n, 1, 1000 + n);
    auto fast = spectra::dft2(img);
    auto slow = oracle::dft2(img);
    double scale = 0.0, err = 0.0;
    for (std::size_t i = 0; i < slow.size(); ++i) {
      scale = std::max(scale, std::abs(slow[i]));
      err = std::max(err, std::abs(fast.bins()[i] - slow[i]));
    }
    worst = std::max(worst, err / scale);

    std::vector<oracle::Complex> bins(fast.bins().begin(), fast.bins().end());
    Image back = spectra::idft2(fast);
    Image back_slow = oracle::idft2(bins, n, n);
    for (std::size_t i = 0; i < back.data().size(); ++i) {
      worst = std::max(worst, std::abs(back.data()[i] - back_slow.data()[i]) / std::max(1e-300, std::abs(back_slow.data()[i])));
    }
    for (double r : {2.0, 4.0}) {
      Image a = spectra::antialias_downsample(img, r);
      Image b = oracle::downsample(img, r);
      double peak = 0.0, e = 0.0;
      for (std::size_t i = 0; i < b.data().size(); ++i) {
        peak = std::max(peak, std::abs(b.data()[i]));
        e = std::max(e, std::abs(a.data()[i] - b.data()[i]));
      }
      worst = std::max(worst, e / peak);
    }
  }
  double secs = seconds_since(t0);
  return {worst < 1e-9 && secs < 5.0, "max relative error " + fmt("%.2e", worst) + ", " + fmt("%.2f", secs) + " s"};
}

Outcome significance_monotone() {
  int violations = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::vector<Image> views{oracle::random_image(32, 32, 3, 500 + seed)};
    double prev = std::numeric_limits<double>::infinity();
    for (double r : {1.0, 1.5, 2.0, 3.0, 4.0}) {
      double x = spectra::significance(views, r).value;
      if (!(x < prev)) ++violations;
      prev = x;
    }
  }
  double worst = 0.0;
  for (double c : {0.2, 0.75}) {
    std::vector<Image> views{Image(32, 32, 1, c)};
    for (double r : {1.0, 2.0, 4.0}) {
      double expected = 32.0 * 32.0 / (r * r) * c;
      worst = std::max(worst, std::abs(spectra::significance(views, r).value - expected) / expected);
    }
  }
  return {violations == 0 && worst < 1e-7,
          std::to_string(violations) + " monotonicity violations over 20 images, constant-image relative error " +
              fmt("%.2e", worst)};
}

Outcome schedule_endpoints() {
  const int S = 2000;
  bool ok = true;
  std::string notes;
  double worked = schedule::switch_iteration(4.0, 1.0, 2.0, S);
  double full = schedule::switch_iteration(4.0, 1.0, 4.0, S);
  ok &= worked == S / 2.0 && full == S;
  Image brick = load_image(kData + "/brick_128.png");
  std::vector<Image> views{brick};
  auto sched = schedule::ResolutionSchedule::from_views(views, S, {});
  ok &= sched.switch_iters().back() == 0.0;
  int rises = 0;
  for (int k = 1; k < S; ++k) {
    if (sched.continuous(k) > sched.continuous(k - 1)) ++rises;
  }
  ok &= rises == 0;
  const int k1 = sched.first_full_resolution_iter();
  bool tail = true;
  for (int k = k1; k < S; ++k) tail &= sched.floored(k) == 1;
  ok &= tail && sched.floored(S - 1) == 1;
  notes = "worked case s=" + fmt("%.17g", worked) + ", s(X(F))=" + fmt("%.17g", full) +
          ", r_m=" + fmt("%.4f", sched.levels().max_factor()) + ", floored tail from " + std::to_string(k1);
  return {ok, notes};
}

Outcome budget_algebra() {
  bool ok = true;
  ok &= schedule::primitive_target(2000, 1.0, 2000, 200, 1234) == 1234;
  auto example = schedule::primitive_target(0, 2.0, 2000, 100, 1100);
  ok &= example == 350;
  schedule::BudgetState b{0.98, 1.0, 500.0, 100.0};
  int updates = 0;
  while (std::abs(b.p_fin - 5000.0) > 50.0 && updates < 2000) {
    b = schedule::budget_update(b, 100);
    ++updates;
  }
  ok &= std::abs(b.p_fin - 5000.0) <= 50.0;
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> demand(0.0, 1000.0);
  int broken = 0;
  for (int c = 0; c < 1000; ++c) {
    schedule::BudgetState s = schedule::initial_budget(1 + c % 300);
    for (int e = 0; e < 30; ++e) {
      double before = s.p_fin;
      s = schedule::budget_update(s, std::floor(demand(rng)));
      if (s.p_fin < before) ++broken;
    }
  }
  ok &= broken == 0;
  return {ok, "P_i example " + std::to_string(example) + ", converged within 1% after " + std::to_string(updates) +
                  " updates, " + std::to_string(broken) + " monotonicity breaks in 1000 cases"};
}

Outcome gradients() {
  auto t0 = Clock::now();
  splat::RenderOptions exact;
  exact.support_sigma = std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (auto [n, size, seed] : {std::tuple{1, 16, 1}, std::tuple{20, 32, 2}}) {
    splat::SplatModel m = oracle::random_scene(n, 300 + seed);
    Image target = oracle::random_image(size, size, 3, 400 + seed);
    auto lg = splat::render_loss_grad(m, target, size, size, exact);
    auto fd = oracle::finite_difference(
        m, [&](const splat::SplatModel& s) { return splat::render_loss_grad(s, target, size, size, exact).loss; },
        1e-4);
    for (std::size_t i = 0; i < m.size(); ++i) {
      for (int k = 0; k < splat::kParamCount; ++k) {
        double a = splat::param(lg.grads[i], k), f = splat::param(fd[i], k);
        worst = std::max(worst, std::abs(a - f) / std::max({std::abs(a), std::abs(f), 1e-9}));
      }
    }
  }
  double secs = seconds_since(t0);
  return {worst < 1e-3 && secs < 30.0, "max relative error " + fmt("%.2e", worst) + ", " + fmt("%.2f", secs) + " s"};
}

Outcome densification() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int mismatches = 0, ceiling = 0;
  for (int event = 0; event < 200; ++event) {
    int n = 1 + static_cast<int>(u(rng) * 60);
    splat::SplatModel m = oracle::random_scene(n, rng());
    for (auto& g : m.primitives) {
      g.opacity_raw = -7.0 + 9.0 * u(rng);
      double s = std::log(0.002 + 0.03 * u(rng));
      g.log_scale = {s, s};
    }
    std::vector<double> scores(n);
    for (double& s : scores) s = std::round(u(rng) * 40) * 2.5e-5;
    train::DensifyParams p{u(rng) * 1e-3, 0.005, 0.01};
    std::vector<std::uint8_t> alive(n);
    for (int i = 0; i < n; ++i) alive[i] = m.primitives[i].opacity() >= p.prune_opacity;
    std::int64_t target = static_cast<std::int64_t>(u(rng) * 2 * n) - n / 4;
    std::size_t k = static_cast<std::size_t>(std::max<std::int64_t>(0, target - std::count(alive.begin(), alive.end(), 1)));
    if (train::select_top(scores, alive, p.grad_threshold, k) != oracle::top_k(scores, alive, p.grad_threshold, k)) {
      ++mismatches;
    }
    auto d = train::densify(m, scores, target, p, rng);
    auto after = static_cast<std::int64_t>(d.model.size());
    if (after > std::max(d.survivors, target) || after < d.survivors) ++ceiling;
  }
  return {mismatches == 0 && ceiling == 0, std::to_string(mismatches) + " top-k mismatches, " +
                                               std::to_string(ceiling) + " ceiling violations over 200 events"};
}

Outcome headline_proxy() {
  auto t0 = Clock::now();
  cli::FitOptions f;
  f.input = kData + "/brick_128.png";
  f.config.iters = 2000;
  f.config.p_init = 200;
  f.seed = 0;
  f.out = scratch("compare");
  auto r = cli::run_compare(f);
  double secs = seconds_since(t0);
  double pixels = r.report["pixel_cost_reduction_pct"].get<double>();
  double delta = r.report["psnr_delta_db"].get<double>();
  bool ok = pixels >= 30.0 && delta >= -0.5 && secs < 600.0;
  return {ok, "pixel reduction " + fmt("%.1f", pixels) + "%, PSNR dash " +
                  fmt("%.2f", r.report["psnr_dash_db"].get<double>()) + " dB vs none " +
                  fmt("%.2f", r.report["psnr_none_db"].get<double>()) + " dB (delta " + fmt("%+.2f", delta) +
                  "), pixel*primitive reduction " +
                  fmt("%.1f", r.report["pixel_primitive_cost_reduction_pct"].get<double>()) + "%, " +
                  fmt("%.0f", secs) + " s"};
}

std::vector<int> floored_switches(const schedule::ResolutionSchedule& s, int top) {
  std::vector<int> out;
  for (int f = top - 1; f >= 1; --f) out.push_back(s.first_iter_at_or_below(f));
  return out;
}

Outcome scene_adaptivity() {
  const int S = 2000;
  std::vector<Image> brick{load_image(kData + "/brick_128.png")};
  std::vector<Image> grass{load_image(kData + "/grass_128.png")};
  auto a = schedule::ResolutionSchedule::from_views(brick, S, {});
  auto b = schedule::ResolutionSchedule::from_views(grass, S, {});
  int top = std::max(a.floored(0), b.floored(0));
  auto va = floored_switches(a, top), vb = floored_switches(b, top);
  int best = 0;
  std::string list;
  for (std::size_t i = 0; i < va.size(); ++i) {
    best = std::max(best, std::abs(va[i] - vb[i]));
    list += (i ? " " : "") + std::to_string(va[i]) + "/" + std::to_string(vb[i]);
  }
  return {best >= 0.05 * S, "brick/grass first iteration at floor <= f, f descending: " + list +
                                "; largest gap " + std::to_string(best) + " iterations"};
}

Outcome determinism() {
  ::setenv("DASH_THREADS", "2", 1);
  fs::path root = scratch("determinism");
  cli::FitOptions f;
  f.input = kData + "/gravel_128.png";
  f.config.iters = 300;
  f.config.p_init = 100;
  f.seed = 42;
  f.out = root / "first";
  cli::run_fit(f);
  cli::run_replay(root / "first" / "manifest.json", root / "second");
  bool same = true;
  for (const char* name : {"checkpoint.csv", "metrics.csv"}) {
    same &= io::read_file(root / "first" / name) == io::read_file(root / "second" / name);
  }
  ::unsetenv("DASH_THREADS");
  return {same, same ? "checkpoint.csv and metrics.csv byte-identical after manifest replay"
                     : "outputs differ after manifest replay"};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"dft-oracle-equivalence", dft_oracle},
      {"significance-monotonicity", significance_monotone},
      {"schedule-endpoints", schedule_endpoints},
      {"budget-algebra", budget_algebra},
      {"gradient-correctness", gradients},
      {"densification-oracle", densification},
      {"headline-proxy", headline_proxy},
      {"scene-adaptivity", scene_adaptivity},
      {"determinism", determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %-26s %s\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
