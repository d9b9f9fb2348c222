#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "dashgs/checkpoint.hpp"
#include "dashgs/error.hpp"
#include "dashgs/image_io.hpp"
#include "dashgs/metrics_io.hpp"
#include "dashgs/parallel.hpp"
#include "dashgs/spectra.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace dashgs::cli {

namespace {

double capped(double psnr) { return std::isfinite(psnr) ? std::min(psnr, io::kPsnrCap) : io::kPsnrCap; }

double reduction_pct(double base, double value) { return base > 0.0 ? 100.0 * (base - value) / base : 0.0; }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory '" + dir.string() + "'");
}

ordered_json manifest(const std::string& command, const std::vector<std::string>& inputs, const fs::path& out) {
  ordered_json j;
  j["command"] = command;
  j["tool_version"] = kToolVersion;
  j["inputs"] = inputs;
  j["output_dir"] = out.string();
  j["threads"] = worker_count();
  return j;
}

void write_manifest(const fs::path& dir, const ordered_json& j) {
  io::write_file_atomic(dir / "manifest.json", j.dump(2) + "\n");
}

Image load_checked(const std::string& path) {
  Image image = load_image(path);
  try {
    require_finite(image, "input");
  } catch (const NumericError& e) {
    throw InputError("'" + path + "': " + e.what());
  }
  return image;
}

FitOutcome fit_into(const Image& target, const FitOptions& options) {
  ensure_dir(options.out);
  train::Progress progress;
  if (!options.quiet) {
    const int every = std::max(1, options.config.iters / 20);
    progress = [every](const train::IterRecord& r) {
      if ((r.iter + 1) % every == 0) {
        std::fprintf(stderr, "iter %d  r=%d  n=%lld  loss=%.6f\n", r.iter + 1, r.r_floored,
                     static_cast<long long>(r.n_primitives), r.loss);
      }
    };
  }
  train::TrainResult result = train::train(target, options.config, options.seed, progress);

  Image rendered = splat::render(result.model, target.width(), target.height(), options.config.render);
  const fs::path png = options.out / "render.png";
  fs::path tmp = png;
  tmp += ".tmp";
  save_png(clamp_unit(rendered), tmp);
  fs::rename(tmp, png);
  io::write_file_atomic(options.out / "checkpoint.csv", splat::checkpoint_text(result.model));
  std::ostringstream metrics;
  io::write_metrics_csv(metrics, result.metrics);
  io::write_file_atomic(options.out / "metrics.csv", metrics.str());
  std::ostringstream events;
  io::write_events_csv(events, result.metrics);
  io::write_file_atomic(options.out / "densify.csv", events.str());
  std::string summary = io::summary_json(result.metrics);
  io::write_file_atomic(options.out / "summary.json", summary);

  ordered_json m = manifest("fit", {options.input}, options.out);
  m["seed"] = options.seed;
  m["config"] = config_to_json(options.config);
  write_manifest(options.out, m);
  return {std::move(result.metrics), ordered_json::parse(summary)};
}

}  // namespace

ordered_json config_to_json(const train::TrainConfig& in) {
  const train::TrainConfig c = in.resolved();
  ordered_json j;
  j["mode"] = train::to_string(c.mode);
  j["iters"] = c.iters;
  j["p_init"] = c.p_init;
  j["densify_interval"] = c.densify_interval;
  j["densify_start"] = c.densify_start;
  j["densify_stop"] = c.densify_stop;
  j["grad_threshold"] = c.grad_threshold;
  j["prune_opacity"] = c.prune_opacity;
  j["split_scale_threshold"] = c.split_scale_threshold;
  j["lr"] = {{"position", c.lr.position},
             {"position_final", c.position_lr_final},
             {"scale", c.lr.scale},
             {"rotation", c.lr.rotation},
             {"opacity", c.lr.opacity},
             {"color", c.lr.color}};
  j["schedule"] = {{"a", c.schedule.a},
                   {"levels", c.schedule.levels},
                   {"significance", spectra::to_string(c.schedule.measure)},
                   {"fraction", schedule::to_string(c.schedule.fraction)},
                   {"anchor", schedule::to_string(c.schedule.anchor)},
                   {"min_render_extent", c.schedule.min_render_extent}};
  j["gamma"] = c.gamma;
  j["eta"] = c.eta;
  j["render"] = {{"culling", c.render.culling},
                 {"support_sigma", c.render.support_sigma},
                 {"tile_size", c.render.tile_size}};
  return j;
}

train::TrainConfig config_from_json(const nlohmann::json& j) {
  try {
    train::TrainConfig c;
    if (j.contains("mode")) c.mode = train::scheduler_mode_from_string(j["mode"].get<std::string>());
    auto get = [&](const nlohmann::json& obj, const char* key, auto& field) {
      if (obj.contains(key)) field = obj[key].get<std::decay_t<decltype(field)>>();
    };
    get(j, "iters", c.iters);
    get(j, "p_init", c.p_init);
    get(j, "densify_interval", c.densify_interval);
    get(j, "densify_start", c.densify_start);
    get(j, "densify_stop", c.densify_stop);
    get(j, "grad_threshold", c.grad_threshold);
    get(j, "prune_opacity", c.prune_opacity);
    get(j, "split_scale_threshold", c.split_scale_threshold);
    if (j.contains("lr")) {
      const auto& lr = j["lr"];
      get(lr, "position", c.lr.position);
      get(lr, "position_final", c.position_lr_final);
      get(lr, "scale", c.lr.scale);
      get(lr, "rotation", c.lr.rotation);
      get(lr, "opacity", c.lr.opacity);
      get(lr, "color", c.lr.color);
    }
    if (j.contains("schedule")) {
      const auto& s = j["schedule"];
      get(s, "a", c.schedule.a);
      get(s, "levels", c.schedule.levels);
      get(s, "min_render_extent", c.schedule.min_render_extent);
      if (s.contains("significance")) c.schedule.measure = spectra::measure_from_string(s["significance"]);
      if (s.contains("fraction")) c.schedule.fraction = schedule::fraction_mode_from_string(s["fraction"]);
      if (s.contains("anchor")) c.schedule.anchor = schedule::anchor_from_string(s["anchor"]);
    }
    get(j, "gamma", c.gamma);
    get(j, "eta", c.eta);
    if (j.contains("render")) {
      const auto& r = j["render"];
      get(r, "culling", c.render.culling);
      get(r, "support_sigma", c.render.support_sigma);
      get(r, "tile_size", c.render.tile_size);
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed config: ") + e.what());
  }
}

void run_analyze(const AnalyzeOptions& options) {
  if (options.inputs.empty()) throw InputError("analyze needs at least one image");
  if (options.p_init < 1) throw InputError("p_init must be at least 1");
  std::vector<Image> views;
  for (const std::string& path : options.inputs) views.push_back(load_checked(path));
  for (std::size_t i = 1; i < views.size(); ++i) {
    if (views[i].extent() != views[0].extent()) {
      throw InputError("'" + options.inputs[i] + "' differs in size from '" + options.inputs[0] + "'");
    }
  }
  const spectra::SignificanceProbe probe(views, options.schedule.measure);
  schedule::LevelSet levels;
  try {
    levels = schedule::build_levels(probe, options.schedule.a, options.schedule.levels,
                                    options.schedule.min_render_extent);
  } catch (const InputError& e) {
    throw InputError("'" + options.inputs[0] + "': " + e.what());
  }
  if (options.iters < levels.size()) throw InputError("iters must be at least the level count");
  schedule::ResolutionSchedule sched(levels, options.iters, options.schedule.fraction, options.schedule.anchor);

  ensure_dir(options.out);
  std::ostringstream csv;
  io::write_schedule_csv(csv, sched, options.p_init);
  io::write_file_atomic(options.out / "schedule.csv", csv.str());
  std::ostringstream sig;
  io::write_significance_csv(sig, levels, probe);
  io::write_file_atomic(options.out / "significance.csv", sig.str());

  ordered_json m = manifest("analyze", options.inputs, options.out);
  m["iters"] = options.iters;
  m["p_init"] = options.p_init;
  m["schedule"] = {{"a", options.schedule.a},
                   {"levels", options.schedule.levels},
                   {"significance", spectra::to_string(options.schedule.measure)},
                   {"fraction", schedule::to_string(options.schedule.fraction)},
                   {"anchor", schedule::to_string(options.schedule.anchor)},
                   {"min_render_extent", options.schedule.min_render_extent}};
  if (!levels.target_reached) m["warning"] = "significance target not reached at the largest admissible factor";
  write_manifest(options.out, m);
}

FitOutcome run_fit(const FitOptions& options) {
  options.config.validate();
  return fit_into(load_checked(options.input), options);
}

CompareOutcome run_compare(const FitOptions& options) {
  options.config.validate();
  const Image target = load_checked(options.input);
  CompareOutcome out;
  FitOptions dash = options;
  dash.config.mode = train::SchedulerMode::kDash;
  dash.out = options.out / "dash";
  FitOptions none = options;
  none.config.mode = train::SchedulerMode::kNone;
  none.out = options.out / "none";
  out.dash = fit_into(target, dash);
  out.none = fit_into(target, none);

  const train::RunMetrics& d = out.dash.metrics;
  const train::RunMetrics& n = out.none.metrics;
  ordered_json r;
  r["psnr_dash_db"] = capped(d.psnr_full);
  r["psnr_none_db"] = capped(n.psnr_full);
  r["psnr_delta_db"] = capped(d.psnr_full) - capped(n.psnr_full);
  r["pixel_cost_reduction_pct"] =
      reduction_pct(static_cast<double>(n.total_pixels), static_cast<double>(d.total_pixels));
  r["pixel_primitive_cost_reduction_pct"] = reduction_pct(static_cast<double>(n.total_pixel_primitive_cost),
                                                          static_cast<double>(d.total_pixel_primitive_cost));
  r["wall_time_reduction_pct"] = reduction_pct(n.wall_ms, d.wall_ms);
  r["final_primitives_dash"] = d.final_primitives;
  r["final_primitives_none"] = n.final_primitives;
  io::write_file_atomic(options.out / "compare.json", r.dump(2) + "\n");

  ordered_json m = manifest("compare", {options.input}, options.out);
  m["seed"] = options.seed;
  m["config"] = config_to_json(options.config);
  write_manifest(options.out, m);
  out.report = std::move(r);
  return out;
}

void run_replay(const fs::path& path, const std::optional<fs::path>& out) {
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(io::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw InputError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
  try {
    const std::string command = m.at("command").get<std::string>();
    const auto inputs = m.at("inputs").get<std::vector<std::string>>();
    const fs::path dir = out ? *out : fs::path(m.at("output_dir").get<std::string>());
    if (command == "analyze") {
      AnalyzeOptions a;
      a.inputs = inputs;
      a.iters = m.at("iters").get<int>();
      a.p_init = m.at("p_init").get<int>();
      const auto& s = m.at("schedule");
      a.schedule.a = s.at("a").get<double>();
      a.schedule.levels = s.at("levels").get<int>();
      a.schedule.min_render_extent = s.at("min_render_extent").get<int>();
      a.schedule.measure = spectra::measure_from_string(s.at("significance"));
      a.schedule.fraction = schedule::fraction_mode_from_string(s.at("fraction"));
      a.schedule.anchor = schedule::anchor_from_string(s.at("anchor"));
      a.out = dir;
      run_analyze(a);
      return;
    }
    if (command != "fit" && command != "compare") throw InputError("unknown manifest command '" + command + "'");
    if (inputs.size() != 1) throw InputError("manifest must name exactly one input");
    FitOptions f;
    f.input = inputs.front();
    f.seed = m.at("seed").get<std::uint64_t>();
    f.config = config_from_json(m.at("config"));
    f.out = dir;
    if (command == "fit") {
      run_fit(f);
    } else {
      run_compare(f);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError("'" + path.string() + "' is not a valid manifest: " + e.what());
  }
}

namespace {

void add_schedule_flags(CLI::App& app, schedule::ScheduleOptions& s, std::string& measure, std::string& fraction,
                        std::string& anchor) {
  app.add_option("--a", s.a, "Significance reduction factor for the lowest level")->capture_default_str();
  app.add_option("--levels", s.levels, "Number of resolution levels")->capture_default_str();
  app.add_option("--min-extent", s.min_render_extent, "Smallest render side at the largest factor")
      ->capture_default_str();
  app.add_option("--significance", measure, "Significance measure: band or resampled")->capture_default_str();
  app.add_option("--fraction", fraction, "Switch fraction: log or linear")->capture_default_str();
  app.add_option("--anchor", anchor, "Final segment anchor: end or last-level")->capture_default_str();
}

void add_train_flags(CLI::App& app, FitOptions& f, std::string& measure, std::string& fraction, std::string& anchor,
                     bool& no_culling, bool& verbose) {
  train::TrainConfig& c = f.config;
  app.add_option("input", f.input, "Target image (PNG, PGM or PPM)")->required();
  app.add_option("--out", f.out, "Output directory")->capture_default_str();
  app.add_option("--seed", f.seed, "Random seed")->capture_default_str();
  app.add_option("--iters", c.iters, "Total iterations S")->capture_default_str();
  app.add_option("--p-init", c.p_init, "Initial primitive count")->capture_default_str();
  app.add_option("--densify-interval", c.densify_interval)->capture_default_str();
  app.add_option("--densify-start", c.densify_start)->capture_default_str();
  app.add_option("--densify-stop", c.densify_stop, "Negative means 0.8 * iters")->capture_default_str();
  app.add_option("--grad-threshold", c.grad_threshold, "Positional score threshold")->capture_default_str();
  app.add_option("--prune-opacity", c.prune_opacity)->capture_default_str();
  app.add_option("--split-scale-threshold", c.split_scale_threshold)->capture_default_str();
  app.add_option("--lr-position", c.lr.position)->capture_default_str();
  app.add_option("--lr-position-final", c.position_lr_final)->capture_default_str();
  app.add_option("--lr-scale", c.lr.scale)->capture_default_str();
  app.add_option("--lr-rotation", c.lr.rotation)->capture_default_str();
  app.add_option("--lr-opacity", c.lr.opacity)->capture_default_str();
  app.add_option("--lr-color", c.lr.color)->capture_default_str();
  app.add_option("--gamma", c.gamma, "Budget momentum")->capture_default_str();
  app.add_option("--eta", c.eta, "Budget demand weight")->capture_default_str();
  app.add_option("--support-sigma", c.render.support_sigma, "Culling radius in standard deviations")
      ->capture_default_str();
  app.add_flag("--no-culling", no_culling, "Evaluate every primitive at every pixel");
  app.add_flag("-v,--verbose", verbose, "Print progress to stderr");
  add_schedule_flags(app, c.schedule, measure, fraction, anchor);
}

void apply_schedule_names(schedule::ScheduleOptions& s, const std::string& measure, const std::string& fraction,
                          const std::string& anchor) {
  s.measure = spectra::measure_from_string(measure);
  s.fraction = schedule::fraction_mode_from_string(fraction);
  s.anchor = schedule::anchor_from_string(anchor);
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Frequency-guided resolution and primitive scheduling for 2D Gaussian splatting"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  AnalyzeOptions analyze;
  std::string a_measure = "band", a_fraction = "log", a_anchor = "end";
  CLI::App* cmd_analyze = app.add_subcommand("analyze", "Export the resolution schedule and significance table");
  cmd_analyze->add_option("inputs", analyze.inputs, "Training views")->required();
  cmd_analyze->add_option("--iters", analyze.iters, "Total iterations S")->capture_default_str();
  cmd_analyze->add_option("--p-init", analyze.p_init, "Initial primitive count")->capture_default_str();
  cmd_analyze->add_option("--out", analyze.out, "Output directory")->capture_default_str();
  add_schedule_flags(*cmd_analyze, analyze.schedule, a_measure, a_fraction, a_anchor);

  FitOptions fit;
  std::string f_mode = "dash", f_measure = "band", f_fraction = "log", f_anchor = "end";
  bool f_no_culling = false, f_verbose = false;
  CLI::App* cmd_fit = app.add_subcommand("fit", "Fit one image with or without scheduling");
  add_train_flags(*cmd_fit, fit, f_measure, f_fraction, f_anchor, f_no_culling, f_verbose);
  cmd_fit->add_option("--mode", f_mode, "Scheduler: dash or none")->capture_default_str();

  FitOptions compare;
  std::string c_measure = "band", c_fraction = "log", c_anchor = "end";
  bool c_no_culling = false, c_verbose = false;
  CLI::App* cmd_compare = app.add_subcommand("compare", "Fit with and without scheduling and report savings");
  add_train_flags(*cmd_compare, compare, c_measure, c_fraction, c_anchor, c_no_culling, c_verbose);

  std::string manifest_path;
  std::optional<fs::path> replay_out;
  CLI::App* cmd_replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  cmd_replay->add_option("manifest", manifest_path, "manifest.json")->required();
  cmd_replay->add_option("--out", replay_out, "Output directory (defaults to the recorded one)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*cmd_analyze) {
      apply_schedule_names(analyze.schedule, a_measure, a_fraction, a_anchor);
      run_analyze(analyze);
    } else if (*cmd_fit) {
      apply_schedule_names(fit.config.schedule, f_measure, f_fraction, f_anchor);
      fit.config.mode = train::scheduler_mode_from_string(f_mode);
      fit.config.render.culling = !f_no_culling;
      fit.quiet = !f_verbose;
      FitOutcome r = run_fit(fit);
      std::cout << r.summary.dump() << '\n';
    } else if (*cmd_compare) {
      apply_schedule_names(compare.config.schedule, c_measure, c_fraction, c_anchor);
      compare.config.render.culling = !c_no_culling;
      compare.quiet = !c_verbose;
      CompareOutcome r = run_compare(compare);
      std::cout << r.report.dump(2) << '\n';
    } else if (*cmd_replay) {
      run_replay(manifest_path, replay_out);
    }
  } catch (const InputError& e) {
    std::cerr << "dashgs: " << e.what() << '\n';
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "dashgs: numerical failure: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace dashgs::cli
