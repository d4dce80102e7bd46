#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "stochmech/io/spec.hpp"

namespace stochmech::io {

/// spec.output when set, else $STOCHMECH_OUT (or ./runs) / <kind>-<hash prefix>.
std::filesystem::path output_directory(const ExperimentSpec& spec);

struct RunResult {
  std::filesystem::path directory;
  std::vector<std::string> files;  ///< deterministic outputs, relative to directory
  nlohmann::json summary;
  double wall_seconds = 0.0;
};

/// Runs the experiment and writes spec.json, summary.json, the CSV tables and
/// run_info.json (wall time, threads, SIMD backend; the only file that varies
/// between reruns). Files are staged and moved into place on success; on any
/// error the staged files are removed and the error is rethrown.
RunResult run_experiment(const ExperimentSpec& spec);

/// Time tag used in file names, e.g. "t0.4".
std::string time_tag(double t);

}  // namespace stochmech::io
