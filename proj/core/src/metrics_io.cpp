#include "dashgs/metrics_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <system_error>

#include <json.hpp>
#include <unistd.h>

#include "dashgs/error.hpp"

namespace dashgs::io {

namespace {

std::string fmt(const char* spec, double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

void write_metrics_csv(std::ostream& out, const train::RunMetrics& metrics) {
  out << "iter,r_floored,n_primitives,pixels,loss\n";
  for (const train::IterRecord& r : metrics.iterations) {
    out << r.iter << ',' << r.r_floored << ',' << r.n_primitives << ',' << r.pixels << ',' << fmt("%.9g", r.loss)
        << '\n';
  }
}

void write_events_csv(std::ostream& out, const train::RunMetrics& metrics) {
  out << "iter,before,pruned,candidates,selected,after,p_target,p_fin\n";
  for (const train::DensifyEvent& e : metrics.events) {
    out << e.iter << ',' << e.before << ',' << e.pruned << ',' << e.candidates << ',' << e.selected << ',' << e.after
        << ',' << e.p_target << ',' << fmt("%.9g", e.p_fin) << '\n';
  }
}

std::string summary_json(const train::RunMetrics& metrics) {
  nlohmann::ordered_json j;
  j["psnr_full"] = std::isfinite(metrics.psnr_full) ? std::min(metrics.psnr_full, kPsnrCap) : kPsnrCap;
  j["total_pixels"] = metrics.total_pixels;
  j["total_pixel_primitive_cost"] = metrics.total_pixel_primitive_cost;
  j["wall_ms"] = metrics.wall_ms;
  j["final_primitives"] = metrics.final_primitives;
  return j.dump() + "\n";
}

void write_schedule_csv(std::ostream& out, const schedule::ResolutionSchedule& sched, double p_init) {
  const schedule::BudgetState budget = schedule::initial_budget(p_init);
  const int total = sched.total_iters();
  out << "iter,r_continuous,r_floored,p_target,p_fin\n";
  for (int k = 0; k < total; ++k) {
    int rf = sched.floored(k);
    std::int64_t target = schedule::primitive_target(k, rf, total, p_init, budget.p_fin);
    out << k << ',' << fmt("%.6g", sched.continuous(k)) << ',' << rf << ',' << target << ','
        << fmt("%.6g", budget.p_fin) << '\n';
  }
}

void write_significance_csv(std::ostream& out, const schedule::LevelSet& levels,
                            const spectra::SignificanceProbe& probe) {
  out << "r,significance\n";
  out << fmt("%.6g", 1.0) << ',' << fmt("%.6g", probe(1.0)) << '\n';
  for (int i = 0; i < levels.size(); ++i) {
    out << fmt("%.6g", levels.factors[i]) << ',' << fmt("%.6g", levels.achieved[i]) << '\n';
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw InputError("cannot write " + tmp.string());
    f << contents;
    f.flush();
    if (!f) throw InputError("cannot write " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw InputError("cannot replace " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot read " + path.string());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace dashgs::io
