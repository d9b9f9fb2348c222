#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>

#include "dashgs/schedule.hpp"
#include "dashgs/spectra.hpp"
#include "dashgs/trainer.hpp"

namespace dashgs::io {

/// PSNR values written to files are capped here; +infinity becomes this.
inline constexpr double kPsnrCap = 99.0;

/// `iter,r_floored,n_primitives,pixels,loss`, loss with 9 significant digits.
void write_metrics_csv(std::ostream& out, const train::RunMetrics& metrics);

/// `iter,before,pruned,candidates,selected,after,p_target,p_fin` per
/// densification event; p_target is -1 when uncapped.
void write_events_csv(std::ostream& out, const train::RunMetrics& metrics);

/// One-line JSON object: psnr_full, total_pixels, total_pixel_primitive_cost,
/// wall_ms, final_primitives.
std::string summary_json(const train::RunMetrics& metrics);

/// `iter,r_continuous,r_floored,p_target,p_fin`, 6 significant digits. No
/// training runs here, so p_fin stays at its initial value 5 * p_init and
/// p_target uses the floored factor.
void write_schedule_csv(std::ostream& out, const schedule::ResolutionSchedule& schedule, double p_init);

/// `r,significance`: full resolution first, then every level.
void write_significance_csv(std::ostream& out, const schedule::LevelSet& levels,
                            const spectra::SignificanceProbe& probe);

/// Writes to a sibling temporary file, then renames over path.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace dashgs::io
