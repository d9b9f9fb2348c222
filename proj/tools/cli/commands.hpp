#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dashgs/schedule.hpp"
#include "dashgs/trainer.hpp"

namespace dashgs::cli {

inline constexpr const char* kToolVersion = "0.1.0";

struct AnalyzeOptions {
  std::vector<std::string> inputs;
  schedule::ScheduleOptions schedule{};
  int iters = 2000;
  int p_init = 200;
  std::filesystem::path out = ".";
};

struct FitOptions {
  std::string input;
  train::TrainConfig config{};
  std::uint64_t seed = 0;
  std::filesystem::path out = ".";
  bool quiet = true;
};

struct FitOutcome {
  train::RunMetrics metrics;
  nlohmann::ordered_json summary;
};

struct CompareOutcome {
  FitOutcome dash;
  FitOutcome none;
  nlohmann::ordered_json report;
};

nlohmann::ordered_json config_to_json(const train::TrainConfig& config);
/// Missing keys keep their defaults; unknown enum names throw InputError.
train::TrainConfig config_from_json(const nlohmann::json& j);

void run_analyze(const AnalyzeOptions& options);
FitOutcome run_fit(const FitOptions& options);
CompareOutcome run_compare(const FitOptions& options);
/// Re-runs the command recorded in a manifest, optionally into another
/// output directory.
void run_replay(const std::filesystem::path& manifest, const std::optional<std::filesystem::path>& out);

/// Full command line entry point; returns the process exit code
/// (0 success, 1 input error, 2 numerical failure).
int run(int argc, char** argv);

}  // namespace dashgs::cli
