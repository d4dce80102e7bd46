#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace stochmech::io {

/// Analytic states, process kinds and experiment kinds with their parameter
/// schemas ({key, type, default, description} per parameter). The order is
/// fixed so the listing can be diffed.
nlohmann::json list_catalog();

struct TraceEntry {
  std::filesystem::path file;
  std::string expected;  ///< hash of the governing spec.json
  std::string found;     ///< hash recorded in the file; empty when absent
};

struct TraceReport {
  std::size_t checked = 0;
  std::vector<TraceEntry> mismatched;
  std::vector<std::filesystem::path> unhashed;
  std::vector<std::filesystem::path> orphaned;  ///< no spec.json above the file
  bool ok() const { return mismatched.empty() && unhashed.empty() && orphaned.empty(); }
};

/// Checks every CSV and JSON file under `root` against the nearest spec.json
/// at or above its directory: the spec is re-parsed, its hash recomputed,
/// and compared with the hash the file carries.
TraceReport trace_tree(const std::filesystem::path& root);

}  // namespace stochmech::io
